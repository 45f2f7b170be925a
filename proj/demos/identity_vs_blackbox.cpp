// Backward rules through a ranking solver on a four-item example.

#include "solvergrad/ops.hpp"
#include "solvergrad/solver_node.hpp"

#include <cstdio>

using namespace solvergrad;

static void show(const char* label, const Tensor& t) {
    std::printf("%-28s", label);
    for (double v : t.data) std::printf(" %8.4f", v);
    std::printf("\n");
}

int main() {
    const Vec scores{0.3, 1.2, -0.4, 0.9};
    const Vec target{2, 1, 4, 3};
    Rng rng(0);

    auto run = [&](const char* name, EstimatorConfig cfg) {
        Tape tape;
        const Var omega = tape.variable(Tensor::vector(scores));
        const Var ranks = solver_node(omega, Ranking{4}, cfg, rng);
        const Var loss = sum(square(sub(ranks, tape.constant(Tensor::vector(target)))));
        tape.backward(loss);
        std::printf("%s (loss %.1f)\n", name, loss.value().item());
        show("  ranks", ranks.value());
        show("  d loss / d omega", omega.grad());
    };

    EstimatorConfig identity;
    run("identity", identity);

    EstimatorConfig identity_std;
    identity_std.projection = Projection::standardize();
    run("identity + standardize", identity_std);

    EstimatorConfig bb;
    bb.rule = Rule::blackbox;
    bb.lambda = 1.0;
    run("blackbox, lambda = 1", bb);
}
