#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "beampred/autodiff.hpp"

namespace beampred {

/// Largest relative disagreement between the reverse-mode gradient of the scalar
/// f(x) at `point` and central differences (f(x+eps) - f(x-eps)) / (2 eps).
/// Relative error uses max(|analytic|, |numeric|, 1e-8) as the denominator.
/// `f` is called as f(tape, x) and must return a scalar Var.
template <typename T, typename Fn>
double grad_check(Fn&& f, const BasicTensor<T>& point, double eps) {
    if (!(eps > 0.0 && eps <= 1e-2)) throw DomainError("grad_check: eps must lie in (0, 1e-2], got " + std::to_string(eps));

    auto evaluate = [&](const BasicTensor<T>& x) {
        Tape<T> tape;
        Var<T> out = f(tape, tape.constant(x));
        if (out.value().size() != 1) throw ShapeError("grad_check: function output is not scalar, shape " + shape_str(out.shape()));
        return static_cast<double>(out.value()[0]);
    };

    Tape<T> tape;
    Var<T> x = tape.leaf(point);
    Var<T> out = f(tape, x);
    if (out.value().size() != 1) throw ShapeError("grad_check: function output is not scalar, shape " + shape_str(out.shape()));
    tape.backward(out);
    const BasicTensor<T> analytic = tape.grad(x);

    double worst = 0.0;
    BasicTensor<T> probe = point;
    for (std::size_t i = 0; i < point.size(); ++i) {
        const T orig = probe[i];
        probe[i] = static_cast<T>(orig + eps);
        const double up = evaluate(probe);
        probe[i] = static_cast<T>(orig - eps);
        const double down = evaluate(probe);
        probe[i] = orig;
        const double numeric = (up - down) / (2.0 * eps);
        const double a = analytic[i];
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(a - numeric) / denom);
    }
    return worst;
}

}  // namespace beampred
