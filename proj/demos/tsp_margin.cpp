// Globe TSP: identity + standardization with and without a noise margin.

#include "solvergrad/tasks/globe_tsp.hpp"
#include "solvergrad/tasks/train.hpp"

#include <cstdio>
#include <cstdlib>

using namespace solvergrad;
using namespace solvergrad::tasks;

int main(int argc, char** argv) {
    const int epochs = argc > 1 ? std::atoi(argv[1]) : 40;
    for (double alpha : {0.0, 0.1}) {
        GlobeTspTask task(gen_globe_tsp(30, 5, 500, 200, 3));
        TrainOptions opts;
        opts.epochs = epochs;
        opts.seed = 3;
        opts.eval_every = 10;
        opts.estimator.projection = Projection::standardize();
        opts.estimator.margin = {alpha > 0 ? MarginKind::noise : MarginKind::none, alpha};
        opts.corruption.margin_end = epochs / 2;
        opts.optimizer.batch_size = 20;
        std::printf("alpha = %.1f\n", alpha);
        train(task, opts, [](const RunRecord& r) {
            if (r.split == "test")
                std::printf("  epoch %3d  accuracy %.3f  |omega| %.3f\n", r.epoch, r.metrics.at("accuracy"), r.cost_norm);
        });
    }
}
