// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace beampred::nn
{

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;
using Shape = std::vector<std::size_t>;
// Aligned storage keeps Eigen's vectorised loops on a fixed summation order,
// so results do not depend on where the allocator put the buffer.
using Storage = std::vector<double, Eigen::aligned_allocator<double>>;

inline std::size_t shape_size(const Shape &s)
{
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape &s)
{
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i)
        out += (i ? ", " : "") + std::to_string(s[i]);
    return out + ")";
}

// Dense row-major array. `grad` is empty unless gradients are tracked.
struct Tensor
{
    Shape shape;
    Storage data;
    Storage grad;

    Tensor() = default;
    explicit Tensor(Shape s, double fill = 0.0) : shape(std::move(s)), data(shape_size(shape), fill) {}
    Tensor(Shape s, Storage values) : shape(std::move(s)), data(std::move(values))
    {
        if (data.size() != shape_size(shape))
            throw std::invalid_argument("Tensor: data length does not match shape " + shape_string(shape));
    }
    Tensor(Shape s, const std::vector<double> &values) : shape(std::move(s)), data(values.begin(), values.end())
    {
        if (data.size() != shape_size(shape))
            throw std::invalid_argument("Tensor: data length does not match shape " + shape_string(shape));
    }

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }
    bool has_grad() const { return !grad.empty(); }

    void enable_grad() { grad.assign(data.size(), 0.0); }
    void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

    // Leading dimension as rows, everything else flattened into columns.
    MatMap matrix()
    {
        return {data.data(), static_cast<Eigen::Index>(shape.empty() ? 1 : shape[0]),
                static_cast<Eigen::Index>(shape.empty() ? 1 : data.size() / std::max<std::size_t>(shape[0], 1))};
    }
    ConstMatMap matrix() const
    {
        return {data.data(), static_cast<Eigen::Index>(shape.empty() ? 1 : shape[0]),
                static_cast<Eigen::Index>(shape.empty() ? 1 : data.size() / std::max<std::size_t>(shape[0], 1))};
    }
    MatMap grad_matrix(Eigen::Index rows, Eigen::Index cols) { return {grad.data(), rows, cols}; }
    MatMap as(Eigen::Index rows, Eigen::Index cols) { return {data.data(), rows, cols}; }
    ConstMatMap as(Eigen::Index rows, Eigen::Index cols) const { return {data.data(), rows, cols}; }

    bool operator==(const Tensor &o) const { return shape == o.shape && data == o.data; }
};

inline Tensor from_matrix(const Mat &m)
{
    Tensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
    t.as(m.rows(), m.cols()) = m;
    return t;
}

} // namespace beampred::nn
