// Copyright (C) 2026 signanon contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "signanon/tensor.hpp"

namespace signanon {

// Small dense row-major matrix; attention operands are tiny (tokens x d_model).
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {
        SIGNANON_CHECK(r >= 1 && c >= 1, "Mat: shape must be positive, got (" << r << ", " << c << ")");
    }

    static Mat from(std::initializer_list<std::initializer_list<double>> rows_init) {
        const int r = static_cast<int>(rows_init.size());
        const int c = static_cast<int>(rows_init.begin()->size());
        Mat m(r, c);
        int i = 0;
        for (const auto& row : rows_init) {
            SIGNANON_CHECK(static_cast<int>(row.size()) == c, "Mat::from: ragged rows");
            int j = 0;
            for (double v : row) m.at(i, j++) = v;
            ++i;
        }
        return m;
    }

    double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
};

inline Mat matmul(const Mat& x, const Mat& y) {
    SIGNANON_CHECK(x.cols == y.rows, "matmul: inner dimensions " << x.cols << " vs " << y.rows);
    Mat out(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            const double xv = x.at(i, k);
            for (int j = 0; j < y.cols; ++j) out.at(i, j) += xv * y.at(k, j);
        }
    return out;
}

// x * y^T without materializing the transpose.
inline Mat matmul_nt(const Mat& x, const Mat& y) {
    SIGNANON_CHECK(x.cols == y.cols, "matmul_nt: inner dimensions " << x.cols << " vs " << y.cols);
    Mat out(x.rows, y.rows);
    for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < y.rows; ++j) {
            double acc = 0.0;
            for (int k = 0; k < x.cols; ++k) acc += x.at(i, k) * y.at(j, k);
            out.at(i, j) = acc;
        }
    return out;
}

inline Mat concat_rows(const Mat& top, const Mat& bottom) {
    SIGNANON_CHECK(top.cols == bottom.cols, "concat_rows: column counts " << top.cols << " vs " << bottom.cols);
    Mat out(top.rows + bottom.rows, top.cols);
    std::copy(top.a.begin(), top.a.end(), out.a.begin());
    std::copy(bottom.a.begin(), bottom.a.end(), out.a.begin() + top.a.size());
    return out;
}

// Max-shifted row softmax.
inline void softmax_rows_inplace(Mat& m) {
    for (int i = 0; i < m.rows; ++i) {
        double mx = m.at(i, 0);
        for (int j = 1; j < m.cols; ++j) mx = std::max(mx, m.at(i, j));
        double sum = 0.0;
        for (int j = 0; j < m.cols; ++j) {
            m.at(i, j) = std::exp(m.at(i, j) - mx);
            sum += m.at(i, j);
        }
        for (int j = 0; j < m.cols; ++j) m.at(i, j) /= sum;
    }
}

/// Projection weights for query/key/value, each (d_model, d). Single-head;
/// multi-head support would wrap several weight sets and concatenate outputs.
struct AttentionWeights {
    Mat w_q, w_k, w_v;

    int model_dim() const { return w_q.rows; }
    int head_dim() const { return w_q.cols; }

    void validate() const {
        SIGNANON_CHECK(w_q.rows == w_k.rows && w_q.rows == w_v.rows &&
                       w_q.cols == w_k.cols && w_q.cols == w_v.cols,
                       "AttentionWeights: w_q/w_k/w_v must share (d_model, d)");
    }
};

/// Latent features entering one attention site while generating a frame.
struct FrameFeatures {
    Mat tokens; // (sequence_length, d_model)
    int frame_id = -1;
};

struct AttentionResult {
    Mat output; // (seq, d)
    Mat probs;  // row-stochastic attention map
};

namespace detail {

inline AttentionResult scaled_dot_attention(const Mat& query_tokens, const Mat& context_tokens,
                                            const AttentionWeights& w) {
    w.validate();
    SIGNANON_CHECK(query_tokens.cols == w.model_dim(),
                   "attention: token width " << query_tokens.cols << " != d_model " << w.model_dim());
    SIGNANON_CHECK(context_tokens.cols == w.model_dim(),
                   "attention: context width " << context_tokens.cols << " != d_model " << w.model_dim());
    const Mat q = matmul(query_tokens, w.w_q);
    const Mat k = matmul(context_tokens, w.w_k);
    const Mat v = matmul(context_tokens, w.w_v);
    Mat logits = matmul_nt(q, k);
    const double scale = 1.0 / std::sqrt(static_cast<double>(w.head_dim()));
    for (double& x : logits.a) x *= scale;
    softmax_rows_inplace(logits);
    return {matmul(logits, v), std::move(logits)};
}

} // namespace detail

/// Softmax(Q K^T / sqrt(d)) V with Q, K, V all projected from the frame's own tokens.
inline AttentionResult self_attention_detailed(const FrameFeatures& v, const AttentionWeights& w) {
    return detail::scaled_dot_attention(v.tokens, v.tokens, w);
}

inline Mat self_attention(const FrameFeatures& v, const AttentionWeights& w) {
    return self_attention_detailed(v, w).output;
}

/// Cross-frame variant: queries from the current frame, keys/values from the
/// row-concatenated anchor and previous-frame tokens [v_a; v_prev]. Anchor and
/// previous may be the same features (first generated frame).
inline AttentionResult cross_frame_attention_detailed(const FrameFeatures& v,
                                                      const FrameFeatures& anchor,
                                                      const FrameFeatures& previous,
                                                      const AttentionWeights& w) {
    SIGNANON_CHECK(anchor.tokens.cols == v.tokens.cols && previous.tokens.cols == v.tokens.cols,
                   "cross_frame_attention: all features must share d_model");
    const Mat context = concat_rows(anchor.tokens, previous.tokens);
    return detail::scaled_dot_attention(v.tokens, context, w);
}

inline Mat cross_frame_attention(const FrameFeatures& v, const FrameFeatures& anchor,
                                 const FrameFeatures& previous, const AttentionWeights& w) {
    return cross_frame_attention_detailed(v, anchor, previous, w).output;
}

} // namespace signanon
