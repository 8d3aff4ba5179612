// Softmax-attention transformer with parallel ReLU MLPs, prompt encoding for
// in-context learning, spectral-norm weight projection, the recursive ICL
// data-generation step, and a ridge/OLS in-context surrogate predictor.
//
// Architecture per layer:  Z_k = MLP(ATTN(Z_{k-1})),
//   ATTN(Z) = softmax(Z W Z^T) Z V   (row-wise softmax),
//   MLP applied row-wise as ReLU(M z).
// The forward output is the last row of the final layer (the query position).
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stllab/dataset.hpp"
#include "stllab/linalg.hpp"
#include "stllab/rng.hpp"

namespace stllab {

struct TokenMatrix {
    Mat Z;                    // (2n+1) x d
    std::size_t n_examples = 0;
    double scale = 1.0;       // factor the prompt was multiplied by (<= 1)
};

struct LayerWeights {
    Mat W, V, M;
};

struct TransformerWeights {
    std::vector<LayerWeights> layers;
    double b_w_cap = 1.0;
};

// Prompt rows: [x_1; y_1; x_2; y_2; ...; x_n; y_n; x_query].  Scalar labels
// embed as (y, 0, ..., 0); vector labels must match the token dimension.
// The whole prompt is divided by max(1, max row norm) so every row lies in
// the unit ball; the applied factor is recorded.
inline TokenMatrix encode_prompt(const Dataset& examples, const Vec& query) {
    if (examples.empty()) throw std::invalid_argument("encode_prompt: no examples");
    const std::size_t d = examples.dim();
    if (query.size() != d) throw std::invalid_argument("encode_prompt: query dimension mismatch");
    const std::size_t n = examples.size();
    Mat Z(2 * n + 1, d);
    double max_norm = 0.0;
    auto put_row = [&](std::size_t r, const Vec& v) {
        double nr = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            Z(r, k) = v[k];
            nr += v[k] * v[k];
        }
        max_norm = std::max(max_norm, std::sqrt(nr));
    };
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = examples[i];
        put_row(2 * i, p.x);
        if (p.y.size() == 1) {
            Vec tok(d, 0.0);
            tok[0] = p.y[0];
            put_row(2 * i + 1, tok);
        } else if (p.y.size() == d) {
            put_row(2 * i + 1, p.y);
        } else {
            throw std::invalid_argument("encode_prompt: label dimension mismatch");
        }
    }
    put_row(2 * n, query);
    const double scale = 1.0 / std::max(1.0, max_norm);
    if (scale < 1.0)
        for (auto& v : Z.a) v *= scale;
    return TokenMatrix{std::move(Z), n, scale};
}

// Numerically stable row-wise softmax.
inline void softmax_rows(Mat& s) {
    for (std::size_t i = 0; i < s.rows; ++i) {
        double mx = s(i, 0);
        for (std::size_t j = 1; j < s.cols; ++j) mx = std::max(mx, s(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < s.cols; ++j) {
            s(i, j) = std::exp(s(i, j) - mx);
            sum += s(i, j);
        }
        for (std::size_t j = 0; j < s.cols; ++j) s(i, j) /= sum;
    }
}

inline Vec softmax(Vec z) {
    Mat m(1, z.size());
    for (std::size_t j = 0; j < z.size(); ++j) m(0, j) = z[j];
    softmax_rows(m);
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = m(0, j);
    return z;
}

// softmax(Z W Z^T) Z V
inline Mat attn_layer(const Mat& Z, const Mat& W, const Mat& V) {
    Mat scores = matmul_nt(matmul(Z, W), Z);
    softmax_rows(scores);
    return matmul(scores, matmul(Z, V));
}

// Row-wise ReLU(M a).
inline Mat mlp_layer(const Mat& A, const Mat& M) {
    Mat out(A.rows, M.rows);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t r = 0; r < M.rows; ++r) {
            double s = 0.0;
            for (std::size_t k = 0; k < M.cols; ++k) s += M(r, k) * A(i, k);
            out(i, r) = std::max(s, 0.0);
        }
    return out;
}

inline Vec tf_forward(const TokenMatrix& prompt, const TransformerWeights& weights) {
    if (weights.layers.empty()) throw std::invalid_argument("tf_forward: no layers");
    Mat Z = prompt.Z;
    for (const auto& layer : weights.layers) {
        Z = mlp_layer(attn_layer(Z, layer.W, layer.V), layer.M);
        for (double v : Z.a)
            if (!std::isfinite(v)) throw std::runtime_error("tf_forward: numeric overflow");
    }
    return Z.row(Z.rows - 1);
}

// Rescales each matrix whose spectral norm exceeds its cap (B_W for W, 1 for
// V and M).  Spectral norms come from power iteration with a fixed budget.
inline TransformerWeights project_weights(std::vector<LayerWeights> raw, double b_w_cap) {
    if (!(b_w_cap > 0.0)) throw std::invalid_argument("project_weights: B_W must be > 0");
    auto cap_to = [](Mat& m, double cap) {
        const double s = spectral_norm(m);
        if (s > cap)
            for (auto& v : m.a) v *= cap / s;
    };
    for (auto& layer : raw) {
        cap_to(layer.W, b_w_cap);
        cap_to(layer.V, 1.0);
        cap_to(layer.M, 1.0);
    }
    return TransformerWeights{std::move(raw), b_w_cap};
}

// i.i.d. Gaussian entries at scale 1/sqrt(d), then projected.  Feasible
// weights are all the stability theorems ask for, so untrained random
// weights are enough to exercise the bounds.
inline TransformerWeights random_weights(std::size_t layers, std::size_t d, double b_w_cap,
                                         RngStream& rng) {
    std::vector<LayerWeights> raw;
    raw.reserve(layers);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    auto draw = [&] {
        Mat m(d, d);
        for (auto& v : m.a) v = scale * rng.gaussian();
        return m;
    };
    for (std::size_t l = 0; l < layers; ++l) raw.push_back(LayerWeights{draw(), draw(), draw()});
    return project_weights(std::move(raw), b_w_cap);
}

// Solves the regularized normal equations of the context once; predictions
// are then dot products.
inline Vec icl_ols_theta(const Dataset& context, double ridge = 0.0) {
    if (context.empty()) throw std::invalid_argument("icl_predict_ols: empty context");
    if (ridge < 0.0) throw std::invalid_argument("icl_predict_ols: ridge must be >= 0");
    const std::size_t d = context.dim();
    Mat A(d, d);
    Vec b(d, 0.0);
    for (const auto& p : context) {
        const double y = p.label();
        for (std::size_t i = 0; i < d; ++i) {
            b[i] += p.x[i] * y;
            for (std::size_t j = i; j < d; ++j) A(i, j) += p.x[i] * p.x[j];
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        A(i, i) += ridge;
        for (std::size_t j = 0; j < i; ++j) A(i, j) = A(j, i);
    }
    try {
        return cholesky_solve(std::move(A), std::move(b));
    } catch (const std::runtime_error&) {
        if (ridge == 0.0) throw std::runtime_error("icl_predict_ols: ill-posed; set ridge>0");
        throw;
    }
}

// Regularized least-squares in-context prediction:
//   y_hat = x_query^T (X^T X + ridge I)^{-1} X^T y.
inline double icl_predict_ols(const Dataset& context, const Vec& query, double ridge = 0.0) {
    if (query.size() != context.dim())
        throw std::invalid_argument("icl_predict_ols: query dimension mismatch");
    return dot(icl_ols_theta(context, ridge), query);
}

// One generation of recursive ICL data creation: draw n_queries i.i.d. from
// the input law, label each with the predictor given the context.
// The predictor returns the label token for one query (scalar as a 1-vector).
using IclPredictor = std::function<Vec(const Dataset& context, const Vec& query)>;
using QuerySampler = std::function<Vec(RngStream&)>;

inline Dataset generate_icl_synthetic(const IclPredictor& predictor, const Dataset& context,
                                      std::size_t n_queries, const QuerySampler& sample_query,
                                      RngStream& rng, int origin) {
    Dataset out(context.dim());
    for (std::size_t i = 0; i < n_queries; ++i) {
        Vec q = sample_query(rng);
        Vec y = predictor(context, q);
        out.add(std::move(q), std::move(y), origin);
    }
    return out;
}

}  // namespace stllab
