#include <doctest.h>

#include <fstream>
#include <iterator>
#include <sstream>

#include "cli.hpp"
#include "lstmdssm/checkpoint.hpp"
#include "lstmdssm/text.hpp"
#include "support.hpp"

using lstmdssm::cli::run_cli;

namespace {

struct Run {
    int status = 0;
    std::string out;
    std::string err;
};

Run cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Run r;
    r.status = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// synth -> build-vocab -> train -> eval inside dir; returns the eval table.
std::string pipeline(const testing::TempDir& dir) {
    const auto d = dir.path().string();
    REQUIRE(cli({"synth", "--out-dir", d, "--train", "60", "--heldout", "12", "--seed", "3"}).status == 0);
    REQUIRE(cli({"build-vocab", "--corpus", d + "/train.tsv", d + "/judgments.tsv", "--out",
                 d + "/vocab.txt"})
                .status == 0);
    const auto t = cli({"train", "--data", d + "/train.tsv", "--vocab", d + "/vocab.txt",
                        "--checkpoint", d + "/model.ckpt", "--loss-log", d + "/loss.tsv",
                        "--ncell", "6", "--epochs", "2", "--batch-size", "20"});
    REQUIRE_MESSAGE(t.status == 0, t.err);
    CHECK(t.out.find("epoch 1 mean batch loss") != std::string::npos);
    const auto e = cli({"eval", "--checkpoint", d + "/model.ckpt", "--vocab", d + "/vocab.txt",
                        "--judgments", d + "/judgments.tsv", "--with-bm25"});
    REQUIRE_MESSAGE(e.status == 0, e.err);
    return e.out;
}

}  // namespace

TEST_CASE("param-count") {
    const auto r = cli({"param-count", "--input-dim", "37500", "--ncell", "96"});
    CHECK(r.status == 0);
    CHECK(r.out == "14437536\n");
    CHECK(cli({"param-count", "--input-dim", "0", "--ncell", "96"}).status != 0);
}

TEST_CASE("usage errors exit nonzero with a message") {
    auto r = cli({});
    CHECK(r.status != 0);
    r = cli({"train", "--data", "/nonexistent/file"});
    CHECK(r.status != 0);
    CHECK_FALSE(r.err.empty());
    r = cli({"frobnicate"});
    CHECK(r.status != 0);
}

TEST_CASE("gradcheck exits zero when gradients agree") {
    const auto r = cli({"gradcheck", "--trials", "3"});
    CHECK_MESSAGE(r.status == 0, r.out);
    CHECK(r.out.find("overall PASS") != std::string::npos);
}

TEST_CASE("pipeline is reproducible") {
    testing::TempDir a("pipe-a"), b("pipe-b");
    const auto table_a = pipeline(a);
    const auto table_b = pipeline(b);
    CHECK(table_a == table_b);
    CHECK(table_a.find("BM25") != std::string::npos);
    CHECK(table_a.find("LSTM-DSSM") != std::string::npos);
    CHECK(slurp(a / "model.ckpt") == slurp(b / "model.ckpt"));
    CHECK(slurp(a / "loss.tsv") == slurp(b / "loss.tsv"));

    // rank against the trained model
    std::ofstream(a / "cands.txt") << "first title\nsecond title here\n";
    const auto rank = cli({"rank", "--checkpoint", (a / "model.ckpt").string(), "--vocab",
                           (a / "vocab.txt").string(), "--query", "some title", "--candidates",
                           (a / "cands.txt").string()});
    CHECK_MESSAGE(rank.status == 0, rank.err);
    CHECK(rank.out.rfind("1\t", 0) == 0);

    // a vocabulary that does not belong to the checkpoint is refused
    std::ofstream(a / "other.txt") << "#ab\nabc\n";
    const auto mismatch = cli({"eval", "--checkpoint", (a / "model.ckpt").string(), "--vocab",
                               (a / "other.txt").string(), "--judgments",
                               (a / "judgments.tsv").string()});
    CHECK(mismatch.status == 2);
    CHECK(mismatch.err.find("does not match") != std::string::npos);
}

TEST_CASE("rank with an all-zero model reports the degenerate embedding") {
    testing::TempDir dir("rank0");
    const std::vector<lstmdssm::WordSequence> corpus = {{"alpha", "beta"}};
    const auto vocab = lstmdssm::build_vocabulary(corpus);
    lstmdssm::save_vocabulary(dir / "vocab.txt", vocab);
    lstmdssm::Checkpoint cp;
    cp.dims = {vocab.dimension(), 4};
    cp.params = lstmdssm::LstmParameters(cp.dims);
    cp.vocab_hash = vocab.content_hash();
    cp.vocab_dimension = vocab.dimension();
    lstmdssm::save_checkpoint(dir / "zero.ckpt", cp);
    std::ofstream(dir / "cands.txt") << "alpha\nbeta\n";

    const auto r = cli({"rank", "--checkpoint", (dir / "zero.ckpt").string(), "--vocab",
                        (dir / "vocab.txt").string(), "--query", "alpha beta", "--candidates",
                        (dir / "cands.txt").string()});
    CHECK(r.status == 2);
    CHECK(r.err.find("error:") == 0);
    CHECK(r.err.find("zero-norm") != std::string::npos);
}

TEST_CASE("train flags are validated") {
    testing::TempDir dir("flags");
    const auto d = dir.path().string();
    std::ofstream(dir / "t.tsv") << "a b\tc d\ne f\tg h\n";
    REQUIRE(cli({"build-vocab", "--corpus", d + "/t.tsv", "--out", d + "/v.txt"}).status == 0);
    const std::vector<std::string> base = {"train", "--data", d + "/t.tsv", "--vocab", d + "/v.txt",
                                           "--checkpoint", d + "/m.ckpt", "--negatives", "1"};
    auto with = [&](std::vector<std::string> extra) {
        auto args = base;
        args.insert(args.end(), extra.begin(), extra.end());
        return cli(args);
    };
    CHECK(with({"--truncation", "0"}).status == 2);
    CHECK(with({"--truncation", "soon"}).status == 2);
    CHECK(with({"--clip", "-1"}).status == 2);
    CHECK(with({"--momentum", "1.5"}).status == 2);
    CHECK(with({"--truncation", "2", "--clip", "off", "--ncell", "3"}).status == 0);
}
