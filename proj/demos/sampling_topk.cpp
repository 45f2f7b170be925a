// Perturb-and-solve sampling: Gumbel noise on a one-hot solver reproduces
// softmax, Sum-of-Gamma noise perturbs a top-k mask.

#include "solvergrad/estimators.hpp"
#include "solvergrad/solvers.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

using namespace solvergrad;

int main() {
    Rng rng(42);
    const Vec logits{1.0, 0.5, -0.5, 0.0};
    const std::size_t samples = 100000;
    std::vector<double> freq(logits.size(), 0.0);
    for (std::size_t s = 0; s < samples; ++s) {
        const Vec y = sample_perturbed(TopK{4, 1}, logits, Gumbel{1.0}, rng).y;
        for (std::size_t i = 0; i < y.size(); ++i) freq[i] += y[i] / samples;
    }
    double z = 0;
    for (double l : logits) z += std::exp(l);
    std::printf("item  empirical  softmax\n");
    for (std::size_t i = 0; i < logits.size(); ++i) std::printf("%4zu  %9.4f  %7.4f\n", i, freq[i], std::exp(logits[i]) / z);

    const Vec scores{2.0, 1.5, 1.4, 0.2, -1.0, 0.0};
    std::vector<double> inclusion(scores.size(), 0.0);
    const SumOfGamma sog{3, 1.0, 10};
    for (std::size_t s = 0; s < 10000; ++s) {
        const Vec y = sample_perturbed(TopK{6, 3}, scores, sog, rng).y;
        for (std::size_t i = 0; i < y.size(); ++i) inclusion[i] += y[i] / 10000;
    }
    std::printf("\ntop-3 inclusion rates under Sum-of-Gamma noise\n");
    for (std::size_t i = 0; i < scores.size(); ++i) std::printf("score %5.2f  %6.3f\n", scores[i], inclusion[i]);
}
