// Central finite-difference check of nn::backward on small random networks.
#ifndef ACCORD_TESTS_GRADCHECK_HPP
#define ACCORD_TESTS_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "accord/nn.hpp"

namespace gradcheck {

using namespace accord;

/// Denominator floor of the relative error, so that parameters whose true
/// gradient is 0 (dead ReLU units) compare on absolute error instead.
inline constexpr double kRelFloor = 1e-6;

struct Problem {
    nn::NetParams<double> params;
    nn::PolicyInput<double> input;
    nn::Logits<double> coeffs;  // loss = sum over valid heads of coeffs . logits + value_coeff * value
    double value_coeff = 0.0;
};

inline nn::Mask mask_from_bits(int bits) {
    return {(bits & 1) != 0, (bits & 2) != 0, (bits & 4) != 0};
}

/// Random network with every hidden width in [3, 16]. All tensors get O(1)
/// noise so that layer-norm gain/bias and the final layers are exercised.
inline Problem make_problem(std::uint64_t seed, nn::Mask mask) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> width(3, 16);
    nn::NetDims d;
    d.encoder_hidden = width(rng);
    d.encoder_out = width(rng);
    d.head_hidden = width(rng);
    d.critic_hidden1 = width(rng);
    d.critic_hidden2 = width(rng);

    Problem p;
    p.params = nn::init_params<double>(d, seed + 17);
    std::normal_distribution<double> noise(0.0, 0.3);
    p.params.for_each([&](std::string_view, auto& t) {
        for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] += noise(rng);
    });

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    p.input.mask = mask;
    for (int s = 0; s < nn::kSlots; ++s) {
        if (!mask[s]) {
            p.input.slots(s, 0) = 1.0;
            continue;
        }
        p.input.slots(s, 1 + s) = 1.0;
        p.input.slots(s, nn::kTypeDims) = unit(rng);
    }
    for (int g = 0; g < nn::kGlobalFeatures; ++g) p.input.globals(g) = unit(rng);
    std::normal_distribution<double> c(0.0, 1.0);
    for (Eigen::Index i = 0; i < p.coeffs.size(); ++i) p.coeffs.data()[i] = c(rng);
    p.value_coeff = c(rng);
    return p;
}

inline double loss(const Problem& p, const nn::NetParams<double>& params) {
    const auto out = nn::forward(params, p.input);
    double l = p.value_coeff * out.value;
    for (int i = 0; i < nn::kSlots; ++i) {
        if (p.input.mask[i]) l += p.coeffs.row(i).dot(out.logits.row(i));
    }
    return l;
}

struct Result {
    double max_rel_error = 0.0;
    std::string worst_tensor;
    std::int64_t checked = 0;
};

inline Result check(const Problem& p, double h = 1e-5) {
    nn::ForwardCache<double> cache;
    nn::forward(p.params, p.input, &cache);
    auto grads = nn::NetParams<double>::zeros(p.params.dims);
    // Masked rows carry nonzero coefficients on purpose: backward must ignore them.
    nn::backward(p.params, p.input, cache, p.coeffs, p.value_coeff, grads);

    nn::NetParams<double> probe = p.params;
    Result r;
    std::vector<const double*> analytic;
    grads.for_each([&](std::string_view, const auto& t) { analytic.push_back(t.data()); });
    std::size_t tensor = 0;
    probe.for_each([&](std::string_view name, auto& t) {
        const double* g = analytic[tensor++];
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            const double orig = t.data()[i];
            t.data()[i] = orig + h;
            const double up = loss(p, probe);
            t.data()[i] = orig - h;
            const double down = loss(p, probe);
            t.data()[i] = orig;
            const double numeric = (up - down) / (2.0 * h);
            const double err = std::abs(numeric - g[i]) / std::max({std::abs(numeric), std::abs(g[i]), kRelFloor});
            if (err > r.max_rel_error) {
                r.max_rel_error = err;
                r.worst_tensor = std::string(name);
            }
            ++r.checked;
        }
    });
    return r;
}

}  // namespace gradcheck

#endif  // ACCORD_TESTS_GRADCHECK_HPP
