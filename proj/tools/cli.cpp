#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

#include "lstmdssm/checkpoint.hpp"
#include "lstmdssm/error.hpp"
#include "lstmdssm/eval.hpp"
#include "lstmdssm/grad_check.hpp"
#include "lstmdssm/lstm.hpp"
#include "lstmdssm/synthetic.hpp"
#include "lstmdssm/text.hpp"
#include "lstmdssm/trainer.hpp"

namespace lstmdssm::cli {

namespace {

namespace fs = std::filesystem;

struct BuildVocabOptions {
    std::vector<std::string> corpus;
    std::string out;
};

struct TrainOptions {
    std::string data;
    std::string vocab;
    std::string checkpoint;
    std::string loss_log;
    std::string truncation = "full";
    std::string clip = "5.0";
    TrainConfig config;
};

struct EvalOptions {
    std::string checkpoint;
    std::string vocab;
    std::string judgments;
    std::string name = "LSTM-DSSM";
    bool with_bm25 = false;
    Bm25Params bm25;
};

struct Bm25Options {
    std::string judgments;
    Bm25Params bm25;
};

struct RankOptions {
    std::string checkpoint;
    std::string vocab;
    std::string query;
    std::string candidates;
};

struct GradcheckOptions {
    std::uint64_t seed = 1;
    std::size_t trials = 20;
    std::size_t ncell = 8;
    std::size_t input_dim = 50;
    std::size_t negatives = 2;
    std::optional<double> gamma;
    double tolerance = 1e-5;
    double epsilon = 1e-5;
};

struct ParamCountOptions {
    std::size_t input_dim = 0;
    std::size_t ncell = 0;
};

struct SynthOptions {
    std::string out_dir;
    SyntheticSpec spec;
};

std::optional<std::size_t> parse_truncation(const std::string& text) {
    if (text == "full") return std::nullopt;
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || v < 1) {
        throw InputError("--truncation must be 'full' or an integer >= 1");
    }
    return v;
}

std::optional<double> parse_clip(const std::string& text) {
    if (text == "off") return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size() && v > 0.0) return v;
    } catch (const std::exception&) {
    }
    throw InputError("--clip must be 'off' or a positive number");
}

struct LoadedModel {
    Checkpoint checkpoint;
    TrigramVocabulary vocab;
};

LoadedModel load_model(const std::string& checkpoint_path, const std::string& vocab_path) {
    LoadedModel m{load_checkpoint(checkpoint_path), load_vocabulary(vocab_path)};
    if (m.vocab.dimension() != m.checkpoint.dims.input_dim ||
        m.vocab.content_hash() != m.checkpoint.vocab_hash) {
        throw InputError("vocabulary " + vocab_path + " does not match checkpoint " +
                         checkpoint_path);
    }
    return m;
}

int cmd_build_vocab(const BuildVocabOptions& opt, std::ostream& out) {
    VocabularyBuilder builder;
    for (const auto& path : opt.corpus) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw InputError("cannot open " + path);
        std::string line;
        while (std::getline(in, line)) builder.add_sequence(tokenize(line));
    }
    const auto vocab = std::move(builder).finish();
    save_vocabulary(opt.out, vocab);
    out << "vocabulary dimension " << vocab.dimension() << '\n';
    return 0;
}

int cmd_train(TrainOptions opt, std::ostream& out, std::ostream& err) {
    opt.config.truncation_depth = parse_truncation(opt.truncation);
    opt.config.clip_norm = parse_clip(opt.clip);
    opt.config.validate();

    const auto vocab = load_vocabulary(opt.vocab);
    const std::size_t fields = clickthrough_field_count(opt.data);
    // Lines with only query and clicked title get sampled negatives.
    const std::size_t n_required = fields == 2 ? 0 : opt.config.n_negatives;
    const auto data = load_clickthrough(opt.data, n_required);
    if (data.empty()) throw InputError("no instances in " + opt.data);

    const auto result = train(opt.config, data, vocab);
    if (result.truncated_sequences > 0) {
        err << "warning: " << result.truncated_sequences << " sequences truncated to "
            << opt.config.max_sequence_length << " words\n";
    }

    Checkpoint cp;
    cp.dims = result.params.dims();
    cp.gamma = opt.config.gamma;
    cp.vocab_hash = vocab.content_hash();
    cp.vocab_dimension = vocab.dimension();
    cp.params = result.params;
    cp.velocity = result.velocity;
    cp.step = result.steps;
    save_checkpoint(opt.checkpoint, cp);

    if (!opt.loss_log.empty()) {
        std::ofstream log(opt.loss_log, std::ios::binary);
        if (!log) throw Error("cannot write " + opt.loss_log);
        write_loss_log(log, result.batches);
    }
    char buf[96];
    for (std::size_t e = 0; e < result.epoch_mean_loss.size(); ++e) {
        std::snprintf(buf, sizeof buf, "epoch %zu mean batch loss %.6f\n", e,
                      result.epoch_mean_loss[e]);
        out << buf;
    }
    return 0;
}

int cmd_eval(const EvalOptions& opt, std::ostream& out) {
    const auto model = load_model(opt.checkpoint, opt.vocab);
    const auto judged = load_judgments(opt.judgments);
    std::vector<EvalRow> rows;
    if (opt.with_bm25) rows.push_back({"BM25", evaluate_bm25(judged, opt.bm25)});
    rows.push_back({opt.name, evaluate_model(model.checkpoint.params, judged, model.vocab)});
    print_eval_table(out, rows);
    return 0;
}

int cmd_eval_bm25(const Bm25Options& opt, std::ostream& out) {
    const auto judged = load_judgments(opt.judgments);
    const std::vector<EvalRow> rows = {{"BM25", evaluate_bm25(judged, opt.bm25)}};
    print_eval_table(out, rows);
    return 0;
}

int cmd_rank(const RankOptions& opt, std::ostream& out) {
    const auto model = load_model(opt.checkpoint, opt.vocab);
    const auto query = tokenize(opt.query);
    if (query.empty()) throw InputError("query has no words");

    std::ifstream in(opt.candidates, std::ios::binary);
    if (!in) throw InputError("cannot open " + opt.candidates);
    std::vector<std::string> texts;
    std::vector<WordSequence> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto words = tokenize(line);
        if (words.empty()) {
            if (std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t'; })) {
                continue;
            }
            throw InputError("line " + std::to_string(line_no) + ": candidate has no words");
        }
        texts.push_back(line);
        docs.push_back(std::move(words));
    }
    const auto ranked = score_candidates(model.checkpoint.params, query, docs, model.vocab);
    char buf[64];
    for (std::size_t pos = 0; pos < ranked.size(); ++pos) {
        std::snprintf(buf, sizeof buf, "%zu\t%.9g\t", pos + 1, ranked[pos].score);
        out << buf << texts[ranked[pos].index] << '\n';
    }
    return 0;
}

int cmd_gradcheck(const GradcheckOptions& opt, std::ostream& out) {
    GradCheckCaseSpec spec;
    spec.dims = ModelDims{opt.input_dim, opt.ncell};
    spec.n_negatives = opt.negatives;

    GradCheckReport worst;
    worst.epsilon = opt.epsilon;
    worst.tolerance = opt.tolerance;
    for (std::size_t gi = 0; gi < kGroupCount; ++gi) worst.groups[gi].group = kAllGroups[gi];

    char buf[128];
    for (std::size_t trial = 0; trial < opt.trials; ++trial) {
        const std::uint64_t seed = opt.seed + trial;
        const double gamma = opt.gamma.value_or(trial % 2 == 0 ? 1.0 : 10.0);
        const auto c = make_gradcheck_case(seed, spec);
        const auto report =
            check_gradients(c.params, c.instance, c.vocab, gamma, opt.tolerance, opt.epsilon);
        double trial_max = 0.0;
        for (std::size_t gi = 0; gi < kGroupCount; ++gi) {
            const auto& g = report.groups[gi];
            trial_max = std::max(trial_max, g.max_relative_error);
            if (g.max_relative_error > worst.groups[gi].max_relative_error) {
                worst.groups[gi].max_relative_error = g.max_relative_error;
                worst.groups[gi].argmax = g.argmax;
            }
            worst.groups[gi].pass = worst.groups[gi].pass && g.pass;
        }
        worst.pass = worst.pass && report.pass;
        std::snprintf(buf, sizeof buf, "trial %zu seed %llu gamma %g max_rel_error %.3e %s\n",
                      trial, static_cast<unsigned long long>(seed), gamma, trial_max,
                      report.pass ? "PASS" : "FAIL");
        out << buf;
    }
    print_report(out, worst);
    return worst.pass ? 0 : 1;
}

int cmd_synth(const SynthOptions& opt, std::ostream& out) {
    const auto data = make_synthetic_dataset(opt.spec);
    const fs::path dir(opt.out_dir);
    fs::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw Error("cannot write " + (dir / name).string());
        return f;
    };
    {
        auto f = open("train.tsv");
        write_clickthrough(f, data.train);
    }
    {
        auto f = open("heldout.tsv");
        write_clickthrough(f, data.heldout);
    }
    {
        auto f = open("judgments.tsv");
        write_judgments(f, data.heldout_judgments);
    }
    out << "wrote " << data.train.size() << " training and " << data.heldout.size()
        << " held-out instances to " << dir.string() << '\n';
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"LSTM click-through semantic ranking toolkit", "lstmdssm"};
    app.require_subcommand(1);

    BuildVocabOptions vocab_opt;
    auto* build_vocab = app.add_subcommand("build-vocab", "letter-trigram vocabulary from text");
    build_vocab->add_option("--corpus", vocab_opt.corpus, "text files, one sequence per line")
        ->required()
        ->check(CLI::ExistingFile);
    build_vocab->add_option("--out", vocab_opt.out, "vocabulary file to write")->required();

    TrainOptions train_opt;
    auto* train_cmd = app.add_subcommand("train", "train on click-through data");
    train_cmd->add_option("--data", train_opt.data, "click-through file")
        ->required()
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--vocab", train_opt.vocab, "vocabulary file")
        ->required()
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--checkpoint", train_opt.checkpoint, "checkpoint to write")->required();
    train_cmd->add_option("--loss-log", train_opt.loss_log, "per-batch loss log to write");
    auto& cfg = train_opt.config;
    train_cmd->add_option("--ncell", cfg.ncell, "LSTM cells")->capture_default_str();
    train_cmd->add_option("--lr", cfg.learning_rate, "learning rate")->capture_default_str();
    train_cmd->add_option("--momentum", cfg.momentum, "Nesterov momentum")->capture_default_str();
    train_cmd->add_option("--negatives", cfg.n_negatives, "unclicked titles per query")
        ->capture_default_str();
    train_cmd->add_option("--batch-size", cfg.batch_size, "instances per update")
        ->capture_default_str();
    train_cmd->add_option("--epochs", cfg.epochs, "passes over the data")->capture_default_str();
    train_cmd->add_option("--gamma", cfg.gamma, "softmax smoothing factor")->capture_default_str();
    train_cmd->add_option("--truncation", train_opt.truncation, "BPTT depth or 'full'")
        ->capture_default_str();
    train_cmd->add_option("--clip", train_opt.clip, "global gradient norm clip or 'off'")
        ->capture_default_str();
    train_cmd->add_option("--max-seq-len", cfg.max_sequence_length, "words kept per sequence")
        ->capture_default_str();
    train_cmd->add_option("--seed", cfg.seed, "random seed")->capture_default_str();

    EvalOptions eval_opt;
    auto* eval_cmd = app.add_subcommand("eval", "NDCG of a trained model on judgments");
    eval_cmd->add_option("--checkpoint", eval_opt.checkpoint)->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--vocab", eval_opt.vocab)->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--judgments", eval_opt.judgments)->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--name", eval_opt.name, "model name in the table")->capture_default_str();
    eval_cmd->add_flag("--with-bm25", eval_opt.with_bm25, "add a BM25 row");
    eval_cmd->add_option("--k1", eval_opt.bm25.k1)->capture_default_str();
    eval_cmd->add_option("--b", eval_opt.bm25.b)->capture_default_str();

    Bm25Options bm25_opt;
    auto* bm25_cmd = app.add_subcommand("eval-bm25", "NDCG of BM25 on judgments");
    bm25_cmd->add_option("--judgments", bm25_opt.judgments)->required()->check(CLI::ExistingFile);
    bm25_cmd->add_option("--k1", bm25_opt.bm25.k1)->capture_default_str();
    bm25_cmd->add_option("--b", bm25_opt.bm25.b)->capture_default_str();

    RankOptions rank_opt;
    auto* rank_cmd = app.add_subcommand("rank", "rank candidate titles for one query");
    rank_cmd->add_option("--checkpoint", rank_opt.checkpoint)->required()->check(CLI::ExistingFile);
    rank_cmd->add_option("--vocab", rank_opt.vocab)->required()->check(CLI::ExistingFile);
    rank_cmd->add_option("--query", rank_opt.query)->required();
    rank_cmd->add_option("--candidates", rank_opt.candidates, "one candidate title per line")
        ->required()
        ->check(CLI::ExistingFile);

    GradcheckOptions gc_opt;
    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference check of the gradients");
    gc_cmd->add_option("--seed", gc_opt.seed)->capture_default_str();
    gc_cmd->add_option("--trials", gc_opt.trials)->capture_default_str();
    gc_cmd->add_option("--ncell", gc_opt.ncell)->capture_default_str();
    gc_cmd->add_option("--input-dim", gc_opt.input_dim)->capture_default_str();
    gc_cmd->add_option("--negatives", gc_opt.negatives)->capture_default_str();
    gc_cmd->add_option("--gamma", gc_opt.gamma, "fixed gamma; default alternates 1 and 10");
    gc_cmd->add_option("--tolerance", gc_opt.tolerance)->capture_default_str();
    gc_cmd->add_option("--epsilon", gc_opt.epsilon)->capture_default_str();

    ParamCountOptions pc_opt;
    auto* pc_cmd = app.add_subcommand("param-count", "number of trainable parameters");
    pc_cmd->add_option("--input-dim", pc_opt.input_dim)->required()->check(CLI::PositiveNumber);
    pc_cmd->add_option("--ncell", pc_opt.ncell)->required()->check(CLI::PositiveNumber);

    SynthOptions synth_opt;
    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic order-sensitive dataset");
    synth_cmd->add_option("--out-dir", synth_opt.out_dir)->required();
    synth_cmd->add_option("--seed", synth_opt.spec.seed)->capture_default_str();
    synth_cmd->add_option("--train", synth_opt.spec.train_count)->capture_default_str();
    synth_cmd->add_option("--heldout", synth_opt.spec.heldout_count)->capture_default_str();
    synth_cmd->add_option("--negatives", synth_opt.spec.n_negatives)->capture_default_str();
    synth_cmd->add_flag("--train-with-negatives", synth_opt.spec.train_with_negatives,
                        "write distractors into train.tsv instead of leaving them to sampling");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*build_vocab) return cmd_build_vocab(vocab_opt, out);
        if (*train_cmd) return cmd_train(train_opt, out, err);
        if (*eval_cmd) return cmd_eval(eval_opt, out);
        if (*bm25_cmd) return cmd_eval_bm25(bm25_opt, out);
        if (*rank_cmd) return cmd_rank(rank_opt, out);
        if (*gc_cmd) return cmd_gradcheck(gc_opt, out);
        if (*pc_cmd) {
            out << count_parameters(ModelDims{pc_opt.input_dim, pc_opt.ncell}) << '\n';
            return 0;
        }
        if (*synth_cmd) return cmd_synth(synth_opt, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

}  // namespace lstmdssm::cli
