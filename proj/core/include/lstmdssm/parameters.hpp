#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace lstmdssm {

/// Shape of one LSTM layer: trigram input dimension and number of cells.
struct ModelDims {
    std::size_t input_dim = 0;
    std::size_t ncell = 0;

    bool valid() const { return input_dim >= 1 && ncell >= 1; }
    friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// Dense row-major matrix of doubles. Vectors are stored as rows x 1.
struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// The fifteen parameter groups of a peephole LSTM cell.
///
/// Index 1 belongs to the output gate, 2 to the forget gate, 3 to the input
/// gate and 4 to the candidate input. The W groups multiply the hashed word
/// vector, the Wrec groups multiply the previous output, and the diagonal
/// peepholes Wp multiply the cell state.
enum class Group : std::size_t {
    W1, W2, W3, W4,
    Wrec1, Wrec2, Wrec3, Wrec4,
    Wp1, Wp2, Wp3,
    b1, b2, b3, b4,
};

inline constexpr std::size_t kGroupCount = 15;

inline constexpr std::array<Group, kGroupCount> kAllGroups = {
    Group::W1,    Group::W2,    Group::W3,    Group::W4,  Group::Wrec1,
    Group::Wrec2, Group::Wrec3, Group::Wrec4, Group::Wp1, Group::Wp2,
    Group::Wp3,   Group::b1,    Group::b2,    Group::b3,  Group::b4,
};

std::string_view group_name(Group g);

/// Shape of a group for the given dims.
std::pair<std::size_t, std::size_t> group_shape(Group g, const ModelDims& dims);

/// A full set of per-group arrays shaped by ModelDims. The tag keeps
/// parameters, gradients and momentum apart at the type level.
template <typename Tag>
class ParameterSet {
  public:
    ParameterSet() = default;

    /// All-zero set with shapes taken from dims.
    explicit ParameterSet(const ModelDims& dims) : dims_(dims) {
        for (Group g : kAllGroups) {
            auto [r, c] = group_shape(g, dims);
            groups_[index(g)] = Tensor(r, c);
        }
    }

    /// Copies the values of a differently tagged set.
    template <typename OtherTag>
    explicit ParameterSet(const ParameterSet<OtherTag>& other) : dims_(other.dims()) {
        for (Group g : kAllGroups) groups_[index(g)] = other[g];
    }

    const ModelDims& dims() const { return dims_; }

    Tensor& operator[](Group g) { return groups_[index(g)]; }
    const Tensor& operator[](Group g) const { return groups_[index(g)]; }

    /// Total number of scalars across all groups.
    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& t : groups_) n += t.size();
        return n;
    }

    void set_zero() {
        for (auto& t : groups_) std::fill(t.values.begin(), t.values.end(), 0.0);
    }

    bool all_finite() const;

    friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

  private:
    static constexpr std::size_t index(Group g) { return static_cast<std::size_t>(g); }

    ModelDims dims_;
    std::array<Tensor, kGroupCount> groups_;
};

struct ParamsTag {};
struct GradientsTag {};
struct VelocityTag {};

/// Trainable weights of the cell.
using LstmParameters = ParameterSet<ParamsTag>;
/// Derivatives of a loss with respect to LstmParameters.
using Gradients = ParameterSet<GradientsTag>;
/// Nesterov momentum state.
using Velocity = ParameterSet<VelocityTag>;

bool all_finite(std::span<const double> xs);

template <typename Tag>
bool ParameterSet<Tag>::all_finite() const {
    for (const auto& t : groups_) {
        if (!lstmdssm::all_finite(t.values)) return false;
    }
    return true;
}

/// dst += alpha * src, group by group. Shapes must match.
template <typename DstTag, typename SrcTag>
void axpy(ParameterSet<DstTag>& dst, double alpha, const ParameterSet<SrcTag>& src) {
    for (Group g : kAllGroups) {
        auto& d = dst[g].values;
        const auto& s = src[g].values;
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += alpha * s[i];
    }
}

template <typename Tag>
void scale(ParameterSet<Tag>& set, double alpha) {
    for (Group g : kAllGroups) {
        for (double& v : set[g].values) v *= alpha;
    }
}

/// Euclidean norm over every scalar of every group.
template <typename Tag>
double global_norm(const ParameterSet<Tag>& set) {
    double sq = 0.0;
    for (Group g : kAllGroups) {
        for (double v : set[g].values) sq += v * v;
    }
    return std::sqrt(sq);
}

}  // namespace lstmdssm
