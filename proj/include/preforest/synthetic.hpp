#pragma once

// Synthetic verification tasks with analytically known preimages. A margin
// expression (min/max tree over affine terms) is compiled into an exact
// ReLU network, so the generated tasks exercise the real inference path
// while ground truth stays closed-form.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "preforest/box.hpp"
#include "preforest/network.hpp"
#include "preforest/rng.hpp"

namespace preforest {

// --- margin expressions ------------------------------------------------------

struct MarginExpr {
    enum class Kind { affine, min_of, max_of };
    Kind kind = Kind::affine;
    std::vector<double> w;
    double b = 0.0;
    std::vector<MarginExpr> children;

    static MarginExpr affine(std::vector<double> w, double b) {
        MarginExpr e;
        e.kind = Kind::affine;
        e.w = std::move(w);
        e.b = b;
        return e;
    }
    static MarginExpr min_of(std::vector<MarginExpr> kids) {
        if (kids.empty()) throw std::invalid_argument("min_of: no children");
        if (kids.size() == 1) return kids.front();
        MarginExpr e;
        e.kind = Kind::min_of;
        e.children = std::move(kids);
        return e;
    }
    static MarginExpr max_of(std::vector<MarginExpr> kids) {
        if (kids.empty()) throw std::invalid_argument("max_of: no children");
        if (kids.size() == 1) return kids.front();
        MarginExpr e;
        e.kind = Kind::max_of;
        e.children = std::move(kids);
        return e;
    }

    /// Reference interpreter; the compiled network must agree with this.
    double evaluate(std::span<const double> x) const {
        switch (kind) {
        case Kind::affine: {
            double acc = b;
            for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * x[i];
            return acc;
        }
        case Kind::min_of: {
            double m = std::numeric_limits<double>::infinity();
            for (const auto& c : children) m = std::min(m, c.evaluate(x));
            return m;
        }
        case Kind::max_of: {
            double m = -std::numeric_limits<double>::infinity();
            for (const auto& c : children) m = std::max(m, c.evaluate(x));
            return m;
        }
        }
        return 0.0;
    }
};

namespace synth_detail {

// Binary node of the flattened expression. min(a,b) = a - relu(a-b) and
// max(a,b) = a + relu(b-a); relu(a) - relu(-a) reconstructs a through a
// ReLU layer, which also serves as the passthrough for depth alignment.
struct BinNode {
    int kind = 0; // 0 affine, 1 min, 2 max
    std::vector<double> w;
    double b = 0.0;
    int child_a = -1;
    int child_b = -1;
    int depth = 0;
    int need_until = 0;
};

struct AffineOverLayer {
    std::vector<double> coeffs;
    double bias = 0.0;
};

class Compiler {
public:
    explicit Compiler(std::size_t input_dim) : input_dim_(input_dim) {}

    int add(const MarginExpr& e) {
        if (e.kind == MarginExpr::Kind::affine) {
            BinNode n;
            n.kind = 0;
            n.w = e.w;
            if (n.w.size() != input_dim_)
                throw std::invalid_argument("margin expression: affine width mismatch");
            n.b = e.b;
            n.depth = 0;
            nodes_.push_back(std::move(n));
            return static_cast<int>(nodes_.size() - 1);
        }
        std::vector<int> ids;
        ids.reserve(e.children.size());
        for (const auto& c : e.children) ids.push_back(add(c));
        const int kind = e.kind == MarginExpr::Kind::min_of ? 1 : 2;
        // balanced pairwise fold
        while (ids.size() > 1) {
            std::vector<int> next;
            for (std::size_t i = 0; i + 1 < ids.size(); i += 2) {
                BinNode n;
                n.kind = kind;
                n.child_a = ids[i];
                n.child_b = ids[i + 1];
                n.depth = std::max(nodes_[ids[i]].depth, nodes_[ids[i + 1]].depth) + 1;
                nodes_.push_back(std::move(n));
                next.push_back(static_cast<int>(nodes_.size() - 1));
            }
            if (ids.size() % 2 == 1) next.push_back(ids.back());
            ids = std::move(next);
        }
        return ids.front();
    }

    Network compile(int root) {
        const int total_depth = nodes_[root].depth;
        // every operand must stay representable until its consumer's layer
        for (const auto& n : nodes_) {
            if (n.kind == 0) continue;
            for (int c : {n.child_a, n.child_b})
                nodes_[c].need_until = std::max(nodes_[c].need_until, n.depth - 1);
        }
        nodes_[root].need_until = std::max(nodes_[root].need_until, total_depth);

        std::vector<AffineOverLayer> repr(nodes_.size());
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (nodes_[i].kind == 0) {
                repr[i].coeffs = nodes_[i].w;
                repr[i].bias = nodes_[i].b;
            }
        }

        std::vector<Layer> layers;
        std::size_t prev_width = input_dim_;
        for (int level = 1; level <= total_depth; ++level) {
            Layer layer;
            layer.activation = Activation::relu;
            layer.in_dim = prev_width;
            std::vector<double> rows;
            std::vector<double> biases;
            // unit slots assigned this level: (node, role) -> unit index
            struct Pending {
                std::size_t node;
                int diff_unit, pos_unit, neg_unit; // -1 for passthroughs' diff
            };
            std::vector<Pending> pending;

            auto push_row = [&](const AffineOverLayer& a, double scale_a,
                                const AffineOverLayer* b = nullptr, double scale_b = 0.0) {
                std::vector<double> row(prev_width, 0.0);
                for (std::size_t j = 0; j < a.coeffs.size(); ++j) row[j] += scale_a * a.coeffs[j];
                double bias = scale_a * a.bias;
                if (b) {
                    for (std::size_t j = 0; j < b->coeffs.size(); ++j)
                        row[j] += scale_b * b->coeffs[j];
                    bias += scale_b * b->bias;
                }
                rows.insert(rows.end(), row.begin(), row.end());
                biases.push_back(bias);
                return static_cast<int>(biases.size() - 1);
            };

            for (std::size_t i = 0; i < nodes_.size(); ++i) {
                const BinNode& n = nodes_[i];
                if (n.kind != 0 && n.depth == level) {
                    const auto& a = repr[n.child_a];
                    const auto& b = repr[n.child_b];
                    // min: relu(a-b); max: relu(b-a)
                    const int diff = n.kind == 1 ? push_row(a, 1.0, &b, -1.0)
                                                 : push_row(b, 1.0, &a, -1.0);
                    const int pos = push_row(a, 1.0);
                    const int neg = push_row(a, -1.0);
                    pending.push_back({i, diff, pos, neg});
                } else if (n.depth < level && n.need_until >= level) {
                    const int pos = push_row(repr[i], 1.0);
                    const int neg = push_row(repr[i], -1.0);
                    pending.push_back({i, -1, pos, neg});
                }
            }

            layer.out_dim = biases.size();
            layer.weights = std::move(rows);
            layer.bias = std::move(biases);
            const std::size_t width = layer.out_dim;
            layers.push_back(std::move(layer));

            for (const auto& p : pending) {
                AffineOverLayer a;
                a.coeffs.assign(width, 0.0);
                a.bias = 0.0;
                a.coeffs[static_cast<std::size_t>(p.pos_unit)] = 1.0;
                a.coeffs[static_cast<std::size_t>(p.neg_unit)] = -1.0;
                if (p.diff_unit >= 0) {
                    const double sign = nodes_[p.node].kind == 1 ? -1.0 : 1.0;
                    a.coeffs[static_cast<std::size_t>(p.diff_unit)] = sign;
                }
                repr[p.node] = std::move(a);
            }
            prev_width = width;
        }

        Layer out;
        out.activation = Activation::linear;
        out.in_dim = prev_width;
        out.out_dim = 1;
        out.weights = repr[root].coeffs;
        out.bias = {repr[root].bias};
        layers.push_back(std::move(out));
        return Network(std::move(layers), input_dim_);
    }

private:
    std::size_t input_dim_;
    std::vector<BinNode> nodes_;
};

} // namespace synth_detail

/// Exact single-output ReLU network computing the margin expression.
inline Network compile_margin_network(const MarginExpr& expr, std::size_t input_dim) {
    synth_detail::Compiler c(input_dim);
    const int root = c.add(expr);
    return c.compile(root);
}

/// min_i min(x_i - lo_i, hi_i - x_i): nonnegative exactly on the box.
inline MarginExpr box_margin_expr(const AxisBox& box) {
    std::vector<MarginExpr> terms;
    const std::size_t n = box.dims();
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> w_lo(n, 0.0), w_hi(n, 0.0);
        w_lo[i] = 1.0;
        w_hi[i] = -1.0;
        terms.push_back(MarginExpr::affine(std::move(w_lo), -box.lower[i]));
        terms.push_back(MarginExpr::affine(std::move(w_hi), box.upper[i]));
    }
    return MarginExpr::min_of(std::move(terms));
}

inline MarginExpr union_margin_expr(const BoxSet& boxes) {
    std::vector<MarginExpr> per_box;
    per_box.reserve(boxes.size());
    for (const auto& b : boxes) per_box.push_back(box_margin_expr(b));
    return MarginExpr::max_of(std::move(per_box));
}

// --- synthetic tasks ---------------------------------------------------------

enum class SyntheticKind { box_indicator, multi_box_union, halfspace, checkerboard };

inline std::string synthetic_kind_name(SyntheticKind k) {
    switch (k) {
    case SyntheticKind::box_indicator: return "box_indicator";
    case SyntheticKind::multi_box_union: return "multi_box_union";
    case SyntheticKind::halfspace: return "halfspace";
    case SyntheticKind::checkerboard: return "checkerboard";
    }
    return "?";
}

struct SyntheticSpec {
    SyntheticKind kind = SyntheticKind::box_indicator;
    std::size_t dims = 2;
    AxisBox domain;              // empty -> unit cube
    BoxSet boxes;                // box kinds; empty -> generated from seed
    std::size_t n_boxes = 3;     // multi_box_union generation
    int grid_depth = 5;          // alignment grid for generated boxes
    std::vector<double> normal;  // halfspace; empty -> axis 0
    double offset = 0.5;         // halfspace: normal . x >= offset
    int checker_cells_per_axis = 4; // power of two
};

/// A concrete network + property whose preimage is known in closed form.
struct SyntheticTask {
    SyntheticSpec spec;
    AxisBox domain;
    MarginLabeler labeler;
    MarginExpr margin; // reference interpreter for the same function

    // exact positive region as boxes with pairwise-disjoint interiors
    // (box_indicator, multi_box_union, checkerboard)
    BoxSet positive_boxes;
    bool has_box_region = false;
    double positive_volume = 0.0; // exact, normalized to Vol(domain) = fraction

    /// Exact fraction of a box that is truly positive. Supported for box
    /// regions and axis-aligned halfspaces.
    double positive_fraction(const AxisBox& b) const {
        const double vb = volume(b);
        if (vb <= 0.0) return 0.0;
        if (has_box_region) {
            double covered = 0.0;
            AxisBox tmp;
            for (const auto& pb : positive_boxes)
                if (intersect(b, pb, tmp)) covered += volume(tmp);
            return covered / vb;
        }
        // axis-aligned halfspace: normal has one nonzero entry
        int axis = -1;
        for (std::size_t i = 0; i < spec.normal.size(); ++i) {
            if (spec.normal[i] != 0.0) {
                if (axis >= 0) throw std::runtime_error("positive_fraction: oblique halfspace");
                axis = static_cast<int>(i);
            }
        }
        const double w = spec.normal[static_cast<std::size_t>(axis)];
        const double bound = spec.offset / w;
        const double lo = b.lower[static_cast<std::size_t>(axis)];
        const double hi = b.upper[static_cast<std::size_t>(axis)];
        double len;
        if (w > 0.0) len = std::max(0.0, hi - std::max(lo, bound));
        else len = std::max(0.0, std::min(hi, bound) - lo);
        return len / (hi - lo);
    }

    /// Exact error of a returned union: vol(union \ positive) / vol(union).
    /// Uses coordinate compression; intended for low dimensions.
    double union_error(const BoxSet& returned) const {
        if (returned.empty()) throw std::invalid_argument("union_error: empty set");
        double union_vol = 0.0, bad_vol = 0.0;
        for_each_disjoint_piece(returned, [&](const AxisBox& piece) {
            const double v = volume(piece);
            union_vol += v;
            bad_vol += v * (1.0 - positive_fraction(piece));
        });
        return union_vol > 0.0 ? bad_vol / union_vol : 0.0;
    }

    /// Exact coverage of the positive region by a returned union.
    double union_coverage(const BoxSet& returned) const {
        if (!has_box_region) throw std::runtime_error("union_coverage: no box region");
        if (positive_volume <= 0.0) throw std::runtime_error("union_coverage: empty positive region");
        double covered = 0.0;
        for (const auto& pb : positive_boxes) covered += union_volume_within(pb, returned);
        return covered / positive_volume;
    }

private:
    // splits the union of possibly overlapping boxes into disjoint pieces via
    // global coordinate compression (cost grows fast with dims; keep N small)
    template <typename Fn>
    void for_each_disjoint_piece(const BoxSet& returned, Fn&& fn) const {
        const std::size_t n = domain.dims();
        if (n > 3) throw std::runtime_error("union decomposition limited to N <= 3");
        std::vector<std::vector<double>> cuts(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (const auto& b : returned) {
                cuts[i].push_back(b.lower[i]);
                cuts[i].push_back(b.upper[i]);
            }
            std::sort(cuts[i].begin(), cuts[i].end());
            cuts[i].erase(std::unique(cuts[i].begin(), cuts[i].end()), cuts[i].end());
        }
        std::vector<std::size_t> idx(n, 0);
        Point center(n);
        while (true) {
            AxisBox piece;
            piece.lower.resize(n);
            piece.upper.resize(n);
            bool nonempty = true;
            for (std::size_t i = 0; i < n; ++i) {
                if (idx[i] + 1 >= cuts[i].size()) { nonempty = false; break; }
                piece.lower[i] = cuts[i][idx[i]];
                piece.upper[i] = cuts[i][idx[i] + 1];
                center[i] = 0.5 * (piece.lower[i] + piece.upper[i]);
            }
            if (nonempty && in_union(returned, center)) fn(piece);
            std::size_t axis = 0;
            while (axis < n) {
                if (idx[axis] + 2 < cuts[axis].size()) { ++idx[axis]; break; }
                idx[axis] = 0;
                ++axis;
            }
            if (axis == n) break;
        }
    }
};

namespace synth_detail {

inline BoxSet random_disjoint_grid_boxes(const AxisBox& domain, std::size_t count, int grid_depth,
                                         RngStream& rng) {
    const std::size_t n = domain.dims();
    const std::int64_t cells = std::int64_t{1} << grid_depth;
    BoxSet out;
    int attempts = 0;
    while (out.size() < count) {
        if (++attempts > 10000)
            throw std::runtime_error("random_disjoint_grid_boxes: cannot place boxes");
        std::vector<double> lo(n), hi(n);
        bool ok = true;
        for (std::size_t i = 0; i < n; ++i) {
            // side between 3 and cells/3 grid steps
            const std::int64_t max_side = std::max<std::int64_t>(3, cells / 3);
            const auto side = static_cast<std::int64_t>(3 + rng.next_below(
                static_cast<std::uint64_t>(max_side - 3 + 1)));
            const auto start = static_cast<std::int64_t>(
                rng.next_below(static_cast<std::uint64_t>(cells - side + 1)));
            const double step = (domain.upper[i] - domain.lower[i]) * std::ldexp(1.0, -grid_depth);
            lo[i] = domain.lower[i] + static_cast<double>(start) * step;
            hi[i] = domain.lower[i] + static_cast<double>(start + side) * step;
        }
        AxisBox candidate(std::move(lo), std::move(hi));
        AxisBox tmp;
        for (const auto& b : out)
            if (intersect(candidate, b, tmp)) { ok = false; break; }
        if (ok) out.push_back(std::move(candidate));
    }
    return out;
}

} // namespace synth_detail

inline SyntheticTask generate_synthetic(SyntheticSpec spec, std::uint64_t seed) {
    if (spec.dims < 1) throw std::invalid_argument("generate_synthetic: dims must be >= 1");
    if (spec.domain.dims() == 0) spec.domain = unit_box(spec.dims);
    if (spec.domain.dims() != spec.dims)
        throw std::invalid_argument("generate_synthetic: domain/dims mismatch");

    RngStream rng(seed, stream_tag::synthetic);
    MarginExpr margin;
    BoxSet region;
    bool has_region = true;
    double pos_vol = 0.0;

    switch (spec.kind) {
    case SyntheticKind::box_indicator: {
        if (spec.boxes.empty())
            spec.boxes = synth_detail::random_disjoint_grid_boxes(spec.domain, 1, spec.grid_depth, rng);
        if (spec.boxes.size() != 1)
            throw std::invalid_argument("box_indicator: exactly one box expected");
        region = spec.boxes;
        margin = box_margin_expr(region.front());
        break;
    }
    case SyntheticKind::multi_box_union: {
        if (spec.boxes.empty())
            spec.boxes = synth_detail::random_disjoint_grid_boxes(spec.domain, spec.n_boxes,
                                                                  spec.grid_depth, rng);
        region = spec.boxes;
        margin = union_margin_expr(region);
        break;
    }
    case SyntheticKind::halfspace: {
        if (spec.normal.empty()) {
            spec.normal.assign(spec.dims, 0.0);
            spec.normal[0] = 1.0;
        }
        if (spec.normal.size() != spec.dims)
            throw std::invalid_argument("halfspace: normal/dims mismatch");
        std::vector<double> w = spec.normal;
        margin = MarginExpr::affine(std::move(w), -spec.offset);
        has_region = false;
        break;
    }
    case SyntheticKind::checkerboard: {
        if (spec.dims > 3)
            throw std::invalid_argument("checkerboard: supported for N <= 3 only");
        const int cells = spec.checker_cells_per_axis;
        if (cells < 2 || (cells & (cells - 1)) != 0)
            throw std::invalid_argument("checkerboard: cells per axis must be a power of two >= 2");
        std::vector<int> idx(spec.dims, 0);
        while (true) {
            int parity = 0;
            for (int v : idx) parity += v;
            if (parity % 2 == 1) {
                std::vector<double> lo(spec.dims), hi(spec.dims);
                for (std::size_t i = 0; i < spec.dims; ++i) {
                    const double step = (spec.domain.upper[i] - spec.domain.lower[i]) /
                                        static_cast<double>(cells);
                    lo[i] = spec.domain.lower[i] + idx[i] * step;
                    hi[i] = spec.domain.lower[i] + (idx[i] + 1) * step;
                }
                region.emplace_back(std::move(lo), std::move(hi));
            }
            std::size_t axis = 0;
            while (axis < spec.dims) {
                if (++idx[axis] < cells) break;
                idx[axis] = 0;
                ++axis;
            }
            if (axis == spec.dims) break;
        }
        margin = union_margin_expr(region);
        break;
    }
    }

    for (const auto& b : region) pos_vol += volume(b);

    Network net = compile_margin_network(margin, spec.dims);
    OutputProperty prop;
    prop.constraints.push_back({{1.0}, 0.0});

    SyntheticTask task{std::move(spec),
                       AxisBox(),
                       MarginLabeler(std::move(net), std::move(prop)),
                       std::move(margin),
                       std::move(region),
                       has_region,
                       0.0};
    task.domain = task.spec.domain;
    if (has_region) {
        task.positive_volume = pos_vol;
    } else {
        int nonzero = 0;
        for (double v : task.spec.normal) nonzero += v != 0.0;
        // exact for axis-aligned normals; unknown (-1) for oblique ones
        task.positive_volume =
            nonzero == 1 ? task.positive_fraction(task.domain) * volume(task.domain) : -1.0;
    }
    return task;
}

// --- fixed presets used across tests and benches -----------------------------

/// Grid-aligned 2-D indicator: preimage [0.25, 0.75]^2, volume 0.25.
inline SyntheticSpec preset_box2d(int grid_depth = 5) {
    SyntheticSpec s;
    s.kind = SyntheticKind::box_indicator;
    s.dims = 2;
    s.grid_depth = grid_depth;
    s.boxes = {AxisBox({0.25, 0.25}, {0.75, 0.75})};
    return s;
}

/// Indicator shifted a third of a grid step: the boundary never lands on a
/// dyadic line, so every straddling cell stays impure at any tree depth.
/// Pure interior leaves need two splits per side, hence the deeper grid.
inline SyntheticSpec preset_noisy_box2d(int grid_depth = 8) {
    SyntheticSpec s;
    s.kind = SyntheticKind::box_indicator;
    s.dims = 2;
    s.grid_depth = grid_depth;
    const double shift = std::ldexp(1.0, -grid_depth) / 3.0;
    s.boxes = {AxisBox({0.25 + shift, 0.25 + shift}, {0.75 + shift, 0.75 + shift})};
    return s;
}

/// Three disjoint grid-aligned boxes, sides >= 3 grid steps, volume ~0.29.
inline SyntheticSpec preset_multibox2d() {
    SyntheticSpec s;
    s.kind = SyntheticKind::multi_box_union;
    s.dims = 2;
    s.grid_depth = 5;
    const double q = 1.0 / 32.0;
    s.boxes = {AxisBox({2 * q, 3 * q}, {12 * q, 13 * q}),
               AxisBox({18 * q, 6 * q}, {30 * q, 14 * q}),
               AxisBox({8 * q, 20 * q}, {17 * q, 30 * q})};
    return s;
}

/// Axis-aligned halfspace through the center: positive volume exactly 1/2.
inline SyntheticSpec preset_halfspace(std::size_t dims) {
    SyntheticSpec s;
    s.kind = SyntheticKind::halfspace;
    s.dims = dims;
    s.normal.assign(dims, 0.0);
    s.normal[0] = 1.0;
    s.offset = 0.5;
    return s;
}

inline SyntheticSpec preset_checkerboard2d(int cells_per_axis = 4) {
    SyntheticSpec s;
    s.kind = SyntheticKind::checkerboard;
    s.dims = 2;
    s.checker_cells_per_axis = cells_per_axis;
    return s;
}

} // namespace preforest
