#pragma once
// Central finite-difference gradient checks shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "galmad/autodiff.hpp"

namespace galmad::testing {

// Builds a scalar loss on the given tape from leaves created for each input.
using LossBuilder = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

struct GradCheck {
    double worst_relative = 0.0;  // max over inputs of ||analytic - numeric|| / max(||analytic||, ||numeric||)
    std::vector<double> relative;
};

inline double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double evaluate(const LossBuilder& build, const std::vector<Tensor>& inputs) {
    ad::Tape tape(ad::GradMode::Disabled);
    std::vector<ad::Var> leaves;
    for (const Tensor& t : inputs) leaves.push_back(tape.constant(t));
    return build(tape, leaves).value().item();
}

inline GradCheck check_gradients(const LossBuilder& build, std::vector<Tensor> inputs, double h = 1e-6) {
    ad::Tape tape;
    std::vector<ad::Var> leaves;
    for (const Tensor& t : inputs) leaves.push_back(tape.variable(t));
    tape.backward(build(tape, leaves));
    GradCheck out;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Tensor analytic = tape.grad(leaves[i]);
        std::vector<double> numeric(inputs[i].size());
        for (std::size_t e = 0; e < inputs[i].size(); ++e) {
            const double keep = inputs[i][e];
            inputs[i][e] = keep + h;
            const double up = evaluate(build, inputs);
            inputs[i][e] = keep - h;
            const double down = evaluate(build, inputs);
            inputs[i][e] = keep;
            numeric[e] = (up - down) / (2.0 * h);
        }
        std::vector<double> diff(numeric.size());
        for (std::size_t e = 0; e < diff.size(); ++e) diff[e] = analytic[e] - numeric[e];
        const double scale = std::max({norm(analytic.buffer()), norm(numeric), 1e-12});
        const double rel = norm(diff) / scale;
        out.relative.push_back(rel);
        out.worst_relative = std::max(out.worst_relative, rel);
    }
    return out;
}

// Gradient check over a model's parameters: perturbs each parameter in place.
inline GradCheck check_parameter_gradients(const std::vector<ad::Parameter*>& params,
                                           const std::function<ad::Var(ad::Tape&)>& build, double h = 1e-6) {
    for (ad::Parameter* p : params) p->zero_grad();
    {
        ad::Tape tape;
        tape.backward(build(tape));
    }
    auto eval = [&] {
        ad::Tape tape(ad::GradMode::Disabled);
        return build(tape).value().item();
    };
    GradCheck out;
    for (ad::Parameter* p : params) {
        const Tensor analytic = p->grad();
        std::vector<double> numeric(p->value().size());
        for (std::size_t e = 0; e < numeric.size(); ++e) {
            const double keep = p->value()[e];
            p->value()[e] = keep + h;
            const double up = eval();
            p->value()[e] = keep - h;
            const double down = eval();
            p->value()[e] = keep;
            numeric[e] = (up - down) / (2.0 * h);
        }
        std::vector<double> diff(numeric.size());
        for (std::size_t e = 0; e < diff.size(); ++e) diff[e] = analytic[e] - numeric[e];
        const double scale = std::max({norm(analytic.buffer()), norm(numeric), 1e-12});
        const double rel = norm(diff) / scale;
        out.relative.push_back(rel);
        out.worst_relative = std::max(out.worst_relative, rel);
    }
    for (ad::Parameter* p : params) p->zero_grad();
    return out;
}

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> d(0.0, scale);
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = d(rng);
    return t;
}

}  // namespace galmad::testing
