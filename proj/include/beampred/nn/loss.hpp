// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tensor.hpp"

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace beampred::nn
{

// Row-wise softmax with max subtraction.
inline Mat softmax(const Mat &logits)
{
    Mat p(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r)
    {
        const double mx = logits.row(r).maxCoeff();
        const Eigen::RowVectorXd e = (logits.row(r).array() - mx).exp().matrix();
        p.row(r) = e / e.sum();
    }
    return p;
}

struct CrossEntropyResult
{
    double loss = 0.0;
    Mat probabilities;
    Mat dlogits; // d loss / d logits
};

// loss = (1/B) * sum_b weight_b * (-log p[b, label_b]).
inline CrossEntropyResult softmax_cross_entropy(const Mat &logits, std::span<const int> labels,
                                                std::span<const double> weights = {})
{
    const auto rows = logits.rows();
    if (static_cast<Eigen::Index>(labels.size()) != rows)
        throw std::invalid_argument("softmax_cross_entropy: one label per row required");
    if (!weights.empty() && static_cast<Eigen::Index>(weights.size()) != rows)
        throw std::invalid_argument("softmax_cross_entropy: one weight per row required");
    if (rows == 0)
        throw std::invalid_argument("softmax_cross_entropy: empty batch");

    CrossEntropyResult r;
    r.probabilities = softmax(logits);
    r.dlogits = r.probabilities;
    const double inv_b = 1.0 / static_cast<double>(rows);
    for (Eigen::Index b = 0; b < rows; ++b)
    {
        const int y = labels[static_cast<std::size_t>(b)];
        if (y < 0 || y >= logits.cols())
            throw std::invalid_argument("softmax_cross_entropy: label out of range");
        const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(b)];
        // log-softmax directly, so confident predictions give exactly 0 loss
        const double mx = logits.row(b).maxCoeff();
        const double lse = mx + std::log((logits.row(b).array() - mx).exp().sum());
        r.loss += w * (lse - logits(b, y)) * inv_b;
        r.dlogits(b, y) -= 1.0;
        r.dlogits.row(b) *= w * inv_b;
    }
    return r;
}

// One-hot rows; rejects anything that is not exactly one 1 and zeros.
inline std::vector<int> labels_from_one_hot(const Mat &one_hot)
{
    std::vector<int> labels;
    for (Eigen::Index r = 0; r < one_hot.rows(); ++r)
    {
        int idx = -1;
        for (Eigen::Index c = 0; c < one_hot.cols(); ++c)
        {
            const double v = one_hot(r, c);
            if (v == 1.0 && idx < 0)
                idx = static_cast<int>(c);
            else if (v != 0.0)
                throw std::invalid_argument("softmax_cross_entropy: labels are not one-hot");
        }
        if (idx < 0)
            throw std::invalid_argument("softmax_cross_entropy: labels are not one-hot");
        labels.push_back(idx);
    }
    return labels;
}

inline CrossEntropyResult softmax_cross_entropy(const Mat &logits, const Mat &one_hot)
{
    if (one_hot.rows() != logits.rows() || one_hot.cols() != logits.cols())
        throw std::invalid_argument("softmax_cross_entropy: label shape mismatch");
    const auto labels = labels_from_one_hot(one_hot);
    return softmax_cross_entropy(logits, labels);
}

} // namespace beampred::nn
