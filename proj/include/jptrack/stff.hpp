#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace jptrack::stff {

/// Dense (B, C, H, W) array of doubles.
struct FeatureMap {
    int b = 0, c = 0, h = 0, w = 0;
    std::vector<double> v;

    FeatureMap() = default;
    FeatureMap(int b_, int c_, int h_, int w_, double fill = 0.0)
        : b(b_), c(c_), h(h_), w(w_), v(static_cast<std::size_t>(b_) * c_ * h_ * w_, fill) {}

    double& at(int bi, int ci, int yi, int xi) {
        return v[((static_cast<std::size_t>(bi) * c + ci) * h + yi) * w + xi];
    }
    double at(int bi, int ci, int yi, int xi) const {
        return v[((static_cast<std::size_t>(bi) * c + ci) * h + yi) * w + xi];
    }
    bool same_shape(const FeatureMap& o) const {
        return b == o.b && c == o.c && h == o.h && w == o.w;
    }
};

inline FeatureMap random_map(int b, int c, int h, int w, std::uint64_t seed) {
    FeatureMap m(b, c, h, w);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto& x : m.v) x = g(rng);
    return m;
}

/// Fixed forward parameters of the fusion block: projections for windowed
/// attention, the positional-encoding projection, and the two 1x1 convs.
struct StffParams {
    int channels = 8;
    int window = 4;
    int n_heads = 2;
    int dim_m = 4;
    double alpha = 0.1;
    std::vector<double> w_q;       // C x C
    std::vector<double> w_kv;      // 2C x C
    std::vector<double> pos_proj;  // dim_m x 2
    std::vector<double> gate_w;    // C x dim_m
    std::vector<double> gate_b;    // C
    std::vector<double> fuse_w;    // 3 x 3C
    std::vector<double> fuse_b;    // 3

    static StffParams seeded(int channels, int window, int n_heads, int dim_m,
                             std::uint64_t seed, double alpha = 0.1) {
        if (channels % n_heads != 0)
            throw std::invalid_argument("stff: channels must divide by n_heads");
        StffParams p;
        p.channels = channels;
        p.window = window;
        p.n_heads = n_heads;
        p.dim_m = dim_m;
        p.alpha = alpha;
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(static_cast<double>(channels)));
        auto fill = [&](std::vector<double>& v, std::size_t n) {
            v.resize(n);
            for (auto& x : v) x = g(rng);
        };
        fill(p.w_q, static_cast<std::size_t>(channels) * channels);
        fill(p.w_kv, 2 * static_cast<std::size_t>(channels) * channels);
        fill(p.pos_proj, static_cast<std::size_t>(dim_m) * 2);
        fill(p.gate_w, static_cast<std::size_t>(channels) * dim_m);
        fill(p.gate_b, static_cast<std::size_t>(channels));
        fill(p.fuse_w, 3 * static_cast<std::size_t>(3) * channels);
        fill(p.fuse_b, 3);
        return p;
    }
};

struct AttentionOutputs {
    FeatureMap x_app;     // (B, C, H, W)
    FeatureMap x_motion;  // (B, dim_m, H, W)
    std::vector<double> attention_row_sums;  // one entry per softmax row
};

namespace detail {

inline void check_attention_shapes(const FeatureMap& x_t, const FeatureMap& x_prev,
                                   const StffParams& p) {
    if (!x_t.same_shape(x_prev)) throw std::invalid_argument("stff: input shapes differ");
    if (x_t.c != p.channels) throw std::invalid_argument("stff: channel count mismatch");
    if (p.window < 1 || x_t.h % p.window != 0 || x_t.w % p.window != 0)
        throw std::invalid_argument("stff: H and W must divide by the window size");
    if (p.channels % p.n_heads != 0)
        throw std::invalid_argument("stff: channels must divide by n_heads");
}

}  // namespace detail

/// Windowed cross-frame attention. Queries come from the current frame,
/// keys/values from the previous one; the positional-encoding residual of
/// the attention map is the motion feature.
inline AttentionOutputs motion_attention(const FeatureMap& x_t, const FeatureMap& x_prev,
                                         const StffParams& p) {
    detail::check_attention_shapes(x_t, x_prev, p);
    const int C = p.channels, S = p.window, H = x_t.h, W = x_t.w, B = x_t.b;
    const int n = S * S;
    const int dk = C / p.n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

    AttentionOutputs out;
    out.x_app = FeatureMap(B, C, H, W);
    out.x_motion = FeatureMap(B, p.dim_m, H, W);

    // positional encoding is shared by all windows
    std::vector<double> epos(static_cast<std::size_t>(n) * p.dim_m);
    for (int r = 0; r < S; ++r)
        for (int cidx = 0; cidx < S; ++cidx) {
            const double u = (r + 0.5) / S;
            const double v = (cidx + 0.5) / S;
            for (int d = 0; d < p.dim_m; ++d)
                epos[static_cast<std::size_t>(r * S + cidx) * p.dim_m + d] =
                    p.pos_proj[static_cast<std::size_t>(d) * 2] * u +
                    p.pos_proj[static_cast<std::size_t>(d) * 2 + 1] * v;
        }

    std::vector<double> q(static_cast<std::size_t>(n) * C), k(q.size()), val(q.size());
    std::vector<double> logits(n), attn(static_cast<std::size_t>(n) * n);

    for (int bi = 0; bi < B; ++bi) {
        for (int wy = 0; wy < H / S; ++wy) {
            for (int wx = 0; wx < W / S; ++wx) {
                // project every window location
                for (int i = 0; i < n; ++i) {
                    const int yi = wy * S + i / S;
                    const int xi = wx * S + i % S;
                    for (int co = 0; co < C; ++co) {
                        double sq = 0.0, sk = 0.0, sv = 0.0;
                        for (int ci = 0; ci < C; ++ci) {
                            const double xt = x_t.at(bi, ci, yi, xi);
                            const double xp = x_prev.at(bi, ci, yi, xi);
                            sq += p.w_q[static_cast<std::size_t>(co) * C + ci] * xt;
                            sk += p.w_kv[static_cast<std::size_t>(co) * C + ci] * xp;
                            sv += p.w_kv[(static_cast<std::size_t>(C) + co) * C + ci] * xp;
                        }
                        q[static_cast<std::size_t>(i) * C + co] = sq;
                        k[static_cast<std::size_t>(i) * C + co] = sk;
                        val[static_cast<std::size_t>(i) * C + co] = sv;
                    }
                }

                for (int head = 0; head < p.n_heads; ++head) {
                    const int c0 = head * dk;
                    for (int i = 0; i < n; ++i) {
                        double lmax = -std::numeric_limits<double>::infinity();
                        for (int j = 0; j < n; ++j) {
                            double dot = 0.0;
                            for (int d = 0; d < dk; ++d)
                                dot += q[static_cast<std::size_t>(i) * C + c0 + d] *
                                       k[static_cast<std::size_t>(j) * C + c0 + d];
                            logits[j] = dot * scale;
                            lmax = std::max(lmax, logits[j]);
                        }
                        double denom = 0.0;
                        for (int j = 0; j < n; ++j) denom += std::exp(logits[j] - lmax);
                        double row_sum = 0.0;
                        for (int j = 0; j < n; ++j) {
                            const double a = std::exp(logits[j] - lmax) / denom;
                            attn[static_cast<std::size_t>(i) * n + j] = a;
                            row_sum += a;
                        }
                        out.attention_row_sums.push_back(row_sum);
                    }

                    for (int i = 0; i < n; ++i) {
                        const int yi = wy * S + i / S;
                        const int xi = wx * S + i % S;
                        for (int d = 0; d < dk; ++d) {
                            double s = 0.0;
                            for (int j = 0; j < n; ++j)
                                s += attn[static_cast<std::size_t>(i) * n + j] *
                                     val[static_cast<std::size_t>(j) * C + c0 + d];
                            out.x_app.at(bi, c0 + d, yi, xi) = s;
                        }
                        // motion residual, averaged over heads
                        for (int d = 0; d < p.dim_m; ++d) {
                            double s = 0.0;
                            for (int j = 0; j < n; ++j)
                                s += attn[static_cast<std::size_t>(i) * n + j] *
                                     epos[static_cast<std::size_t>(j) * p.dim_m + d];
                            out.x_motion.at(bi, d, yi, xi) +=
                                (s - epos[static_cast<std::size_t>(i) * p.dim_m + d]) / p.n_heads;
                        }
                    }
                }
            }
        }
    }
    return out;
}

/// Gating weights from the motion feature, applied to the previous frame.
inline FeatureMap gated_align(const FeatureMap& x_prev, const FeatureMap& x_motion,
                              const StffParams& p) {
    if (x_motion.c != p.dim_m || x_motion.b != x_prev.b || x_motion.h != x_prev.h ||
        x_motion.w != x_prev.w)
        throw std::invalid_argument("gated_align: incompatible shapes");
    FeatureMap out(x_prev.b, x_prev.c, x_prev.h, x_prev.w);
    for (int bi = 0; bi < x_prev.b; ++bi)
        for (int yi = 0; yi < x_prev.h; ++yi)
            for (int xi = 0; xi < x_prev.w; ++xi)
                for (int co = 0; co < x_prev.c; ++co) {
                    double z = p.gate_b[static_cast<std::size_t>(co)];
                    for (int d = 0; d < p.dim_m; ++d)
                        z += p.gate_w[static_cast<std::size_t>(co) * p.dim_m + d] *
                             x_motion.at(bi, d, yi, xi);
                    const double g = 1.0 / (1.0 + std::exp(-z));
                    out.at(bi, co, yi, xi) = x_prev.at(bi, co, yi, xi) * g;
                }
    return out;
}

/// Softmax weights of the three fusion branches, shape (B, 3, H, W).
inline FeatureMap fusion_weights(const FeatureMap& x_t, const FeatureMap& x_app,
                                 const FeatureMap& x_aligned, const StffParams& p) {
    if (!x_t.same_shape(x_app) || !x_t.same_shape(x_aligned))
        throw std::invalid_argument("dynamic_fuse: input shapes differ");
    const int C = x_t.c;
    FeatureMap weights(x_t.b, 3, x_t.h, x_t.w);
    for (int bi = 0; bi < x_t.b; ++bi)
        for (int yi = 0; yi < x_t.h; ++yi)
            for (int xi = 0; xi < x_t.w; ++xi) {
                double z[3];
                for (int kidx = 0; kidx < 3; ++kidx) {
                    double s = p.fuse_b[static_cast<std::size_t>(kidx)];
                    const double* row = &p.fuse_w[static_cast<std::size_t>(kidx) * 3 * C];
                    for (int ci = 0; ci < C; ++ci) {
                        s += row[ci] * x_t.at(bi, ci, yi, xi);
                        s += row[C + ci] * x_app.at(bi, ci, yi, xi);
                        s += row[2 * C + ci] * x_aligned.at(bi, ci, yi, xi);
                    }
                    z[kidx] = s;
                }
                const double m = std::max({z[0], z[1], z[2]});
                const double denom = std::exp(z[0] - m) + std::exp(z[1] - m) + std::exp(z[2] - m);
                for (int kidx = 0; kidx < 3; ++kidx)
                    weights.at(bi, kidx, yi, xi) = std::exp(z[kidx] - m) / denom;
            }
    return weights;
}

inline FeatureMap dynamic_fuse(const FeatureMap& x_t, const FeatureMap& x_app,
                               const FeatureMap& x_aligned, const StffParams& p) {
    const FeatureMap w = fusion_weights(x_t, x_app, x_aligned, p);
    FeatureMap out(x_t.b, x_t.c, x_t.h, x_t.w);
    for (int bi = 0; bi < x_t.b; ++bi)
        for (int yi = 0; yi < x_t.h; ++yi)
            for (int xi = 0; xi < x_t.w; ++xi)
                for (int ci = 0; ci < x_t.c; ++ci)
                    out.at(bi, ci, yi, xi) = w.at(bi, 0, yi, xi) * x_t.at(bi, ci, yi, xi) +
                                             w.at(bi, 1, yi, xi) * x_app.at(bi, ci, yi, xi) +
                                             w.at(bi, 2, yi, xi) * x_aligned.at(bi, ci, yi, xi);
    return out;
}

/// Full block: attention, gated alignment, dynamic fusion, residual blend.
inline FeatureMap stff_forward(const FeatureMap& x_t, const FeatureMap& x_prev,
                               const StffParams& p) {
    const AttentionOutputs att = motion_attention(x_t, x_prev, p);
    const FeatureMap aligned = gated_align(x_prev, att.x_motion, p);
    const FeatureMap fused = dynamic_fuse(x_t, att.x_app, aligned, p);
    FeatureMap out(x_t.b, x_t.c, x_t.h, x_t.w);
    for (std::size_t i = 0; i < out.v.size(); ++i)
        out.v[i] = p.alpha * fused.v[i] + (1.0 - p.alpha) * x_t.v[i];
    return out;
}

inline void save_params(const std::string& path, const StffParams& p) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write params file: " + path);
    f.precision(17);
    f << p.channels << " " << p.window << " " << p.n_heads << " " << p.dim_m << " " << p.alpha
      << "\n";
    auto dump = [&](const std::vector<double>& v) {
        f << v.size();
        for (double x : v) f << " " << x;
        f << "\n";
    };
    dump(p.w_q);
    dump(p.w_kv);
    dump(p.pos_proj);
    dump(p.gate_w);
    dump(p.gate_b);
    dump(p.fuse_w);
    dump(p.fuse_b);
}

inline StffParams load_params(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open params file: " + path);
    StffParams p;
    f >> p.channels >> p.window >> p.n_heads >> p.dim_m >> p.alpha;
    auto slurp = [&](std::vector<double>& v) {
        std::size_t n = 0;
        f >> n;
        v.resize(n);
        for (auto& x : v) f >> x;
    };
    slurp(p.w_q);
    slurp(p.w_kv);
    slurp(p.pos_proj);
    slurp(p.gate_w);
    slurp(p.gate_b);
    slurp(p.fuse_w);
    slurp(p.fuse_b);
    if (!f) throw std::runtime_error("truncated params file: " + path);
    return p;
}

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Invariant suite behind the stff-check CLI command.
inline std::vector<CheckResult> run_invariant_checks(std::uint64_t seed) {
    std::vector<CheckResult> results;
    auto record = [&](const std::string& name, bool pass, const std::string& detail = "") {
        results.push_back({name, pass, detail});
    };

    // attention rows and fusion weights on the simplex
    {
        double worst_row = 0.0, worst_weight = 0.0;
        bool weights_in_range = true;
        for (int trial = 0; trial < 5; ++trial) {
            const auto p = StffParams::seeded(8, 4, 2, 4, seed + trial);
            const auto x_t = random_map(1, 8, 8, 8, seed + 100 + trial);
            const auto x_prev = random_map(1, 8, 8, 8, seed + 200 + trial);
            const auto att = motion_attention(x_t, x_prev, p);
            for (double s : att.attention_row_sums) worst_row = std::max(worst_row, std::abs(s - 1.0));
            const auto aligned = gated_align(x_prev, att.x_motion, p);
            const auto w = fusion_weights(x_t, att.x_app, aligned, p);
            for (int yi = 0; yi < w.h; ++yi)
                for (int xi = 0; xi < w.w; ++xi) {
                    const double sum = w.at(0, 0, yi, xi) + w.at(0, 1, yi, xi) + w.at(0, 2, yi, xi);
                    worst_weight = std::max(worst_weight, std::abs(sum - 1.0));
                    for (int kidx = 0; kidx < 3; ++kidx)
                        if (w.at(0, kidx, yi, xi) < 0.0 || w.at(0, kidx, yi, xi) > 1.0)
                            weights_in_range = false;
                }
        }
        record("attention rows sum to 1", worst_row <= 1e-6,
               "max deviation " + std::to_string(worst_row));
        record("fusion weights on the simplex", worst_weight <= 1e-6 && weights_in_range,
               "max deviation " + std::to_string(worst_weight));
    }

    // single-element windows force a zero motion feature, exactly
    {
        const auto p = StffParams::seeded(8, 1, 2, 4, seed + 1);
        const auto x_t = random_map(1, 8, 6, 6, seed + 2);
        const auto x_prev = random_map(1, 8, 6, 6, seed + 3);
        const auto att = motion_attention(x_t, x_prev, p);
        double worst = 0.0;
        for (double v : att.x_motion.v) worst = std::max(worst, std::abs(v));
        record("window size 1 gives zero motion", worst == 0.0, "max |motion| " + std::to_string(worst));
    }

    // alpha = 0 keeps the input untouched, exactly
    {
        auto p = StffParams::seeded(8, 4, 2, 4, seed + 4);
        p.alpha = 0.0;
        const auto x_t = random_map(1, 8, 8, 8, seed + 5);
        const auto x_prev = random_map(1, 8, 8, 8, seed + 6);
        const auto out = stff_forward(x_t, x_prev, p);
        bool same = out.v == x_t.v;
        record("alpha 0 residual identity", same);
    }

    // shape preservation over randomized configurations
    {
        bool ok = true;
        std::mt19937_64 rng(seed + 7);
        for (int trial = 0; trial < 20; ++trial) {
            const int heads = 1 + static_cast<int>(rng() % 3);
            const int c = heads * (1 + static_cast<int>(rng() % 4));
            const int s = 1 + static_cast<int>(rng() % 4);
            const int hb = 1 + static_cast<int>(rng() % 3);
            const int wb = 1 + static_cast<int>(rng() % 3);
            const int b = 1 + static_cast<int>(rng() % 2);
            const int dm = 1 + static_cast<int>(rng() % 6);
            const auto p = StffParams::seeded(c, s, heads, dm, seed + 300 + trial);
            const auto x_t = random_map(b, c, s * hb, s * wb, seed + 400 + trial);
            const auto x_prev = random_map(b, c, s * hb, s * wb, seed + 500 + trial);
            const auto out = stff_forward(x_t, x_prev, p);
            if (!out.same_shape(x_t)) ok = false;
        }
        record("shape preserved across 20 random configurations", ok);
    }

    // zero query projection makes attention uniform
    {
        auto p = StffParams::seeded(8, 4, 2, 4, seed + 8);
        std::fill(p.w_q.begin(), p.w_q.end(), 0.0);
        const auto x_t = random_map(1, 8, 4, 4, seed + 9);
        const auto x_prev = random_map(1, 8, 4, 4, seed + 10);
        const auto att = motion_attention(x_t, x_prev, p);
        // expected: per-window mean of the projected values
        double worst = 0.0;
        const int C = 8, n = 16;
        for (int co = 0; co < C; ++co) {
            double mean = 0.0;
            for (int yi = 0; yi < 4; ++yi)
                for (int xi = 0; xi < 4; ++xi) {
                    double sv = 0.0;
                    for (int ci = 0; ci < C; ++ci)
                        sv += p.w_kv[(static_cast<std::size_t>(C) + co) * C + ci] *
                              x_prev.at(0, ci, yi, xi);
                    mean += sv;
                }
            mean /= n;
            for (int yi = 0; yi < 4; ++yi)
                for (int xi = 0; xi < 4; ++xi)
                    worst = std::max(worst, std::abs(att.x_app.at(0, co, yi, xi) - mean));
        }
        record("zero queries give value means", worst <= 1e-9, "max deviation " + std::to_string(worst));
    }

    // equal inputs with an identity-preserving fuse stay fixed
    {
        const auto p = StffParams::seeded(8, 4, 2, 4, seed + 11);
        const auto x = random_map(1, 8, 8, 8, seed + 12);
        const auto fused = dynamic_fuse(x, x, x, p);
        double worst = 0.0;
        for (std::size_t i = 0; i < x.v.size(); ++i)
            worst = std::max(worst, std::abs(fused.v[i] - x.v[i]));
        record("equal-input fixed point", worst <= 1e-6, "max deviation " + std::to_string(worst));
    }

    // small input perturbations move the output by O(eps)
    {
        const auto p = StffParams::seeded(8, 4, 2, 4, seed + 13);
        const auto x_t = random_map(1, 8, 8, 8, seed + 14);
        const auto x_prev = random_map(1, 8, 8, 8, seed + 15);
        const auto base = stff_forward(x_t, x_prev, p);
        const double eps = 1e-4;
        double pnorm = 1.0;
        for (double v : p.w_q) pnorm = std::max(pnorm, std::abs(v));
        for (double v : p.w_kv) pnorm = std::max(pnorm, std::abs(v));
        bool ok = true;
        std::mt19937_64 rng(seed + 16);
        for (int trial = 0; trial < 10; ++trial) {
            FeatureMap xp = x_t;
            xp.v[rng() % xp.v.size()] += eps;
            const auto out = stff_forward(xp, x_prev, p);
            double diff = 0.0;
            for (std::size_t i = 0; i < out.v.size(); ++i)
                diff = std::max(diff, std::abs(out.v[i] - base.v[i]));
            if (diff > 10.0 * eps * pnorm * 8.0) ok = false;
        }
        record("finite-difference smoothness", ok);
    }

    return results;
}

}  // namespace jptrack::stff
