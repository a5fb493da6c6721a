// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference checks of analytic gradients.

#pragma once

#include "params.hpp"

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace beampred::nn
{

struct GradCheckSettings
{
    double step = 1e-4;
    double rel_tol = 1e-3;
    double abs_floor = 1e-6;
    std::size_t max_entries_per_array = 0; // 0 = every entry
};

struct GradCheckResult
{
    std::string name;
    std::size_t checked = 0;
    std::size_t failures = 0;
    double max_abs_error = 0.0;
    double max_rel_error = 0.0;
    std::string worst;

    bool passed() const { return checked > 0 && failures == 0; }
};

// |a - n| <= max(rel_tol * max(|a|, |n|), abs_floor)
inline bool gradients_agree(double analytic, double numeric, const GradCheckSettings &s)
{
    const double err = std::abs(analytic - numeric);
    return err <= std::max(s.rel_tol * std::max(std::abs(analytic), std::abs(numeric)), s.abs_floor);
}

namespace detail
{
inline void check_values(GradCheckResult &res, const std::string &array, std::span<double> values,
                         std::span<const double> analytic, const std::function<double()> &loss,
                         const GradCheckSettings &s)
{
    const std::size_t n = values.size();
    const std::size_t stride = s.max_entries_per_array && n > s.max_entries_per_array ? n / s.max_entries_per_array : 1;
    for (std::size_t i = 0; i < n; i += stride)
    {
        const double orig = values[i];
        values[i] = orig + s.step;
        const double up = loss();
        values[i] = orig - s.step;
        const double down = loss();
        values[i] = orig;
        const double num = (up - down) / (2.0 * s.step);
        const double err = std::abs(num - analytic[i]);
        const double rel = err / std::max({std::abs(num), std::abs(analytic[i]), 1e-300});
        ++res.checked;
        if (err > res.max_abs_error)
            res.max_abs_error = err;
        if (err > s.abs_floor && rel > res.max_rel_error)
        {
            res.max_rel_error = rel;
            res.worst = array + "[" + std::to_string(i) + "] analytic " + std::to_string(analytic[i]) + " numeric " +
                        std::to_string(num);
        }
        if (!gradients_agree(analytic[i], num, s))
            ++res.failures;
    }
}
} // namespace detail

// `loss` evaluates the scalar without touching gradients; `loss_and_grad`
// evaluates it and accumulates gradients into `store` (already zeroed).
inline GradCheckResult check_parameter_gradients(const std::string &name, ParamStore &store,
                                                 const std::function<double()> &loss,
                                                 const std::function<void()> &loss_and_grad,
                                                 const GradCheckSettings &s = {})
{
    store.zero_grad();
    loss_and_grad();
    GradCheckResult res;
    res.name = name;
    for (auto &p : store.params())
    {
        const std::vector<double> analytic(p.value.grad.begin(), p.value.grad.end());
        detail::check_values(res, p.name, p.value.data, analytic, loss, s);
    }
    return res;
}

// Gradient with respect to an input array.
inline GradCheckResult check_input_gradient(const std::string &name, std::span<double> input,
                                            std::span<const double> analytic, const std::function<double()> &loss,
                                            const GradCheckSettings &s = {})
{
    GradCheckResult res;
    res.name = name;
    detail::check_values(res, "input", input, analytic, loss, s);
    return res;
}

} // namespace beampred::nn
