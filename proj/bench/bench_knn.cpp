// Compares the serial pairwise-merge kNN reference against the inverted-index
// parallel kernel on a synthetic cell at full cap scale, and checks equality.

#include <chrono>
#include <cstdlib>
#include <iostream>

#include "slicegraph/graph.hpp"
#include "slicegraph/synth.hpp"

using namespace slicegraph;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    int n_slices = 2600;
    int keys = 500;
    if (argc > 1) n_slices = std::atoi(argv[1]);
    if (argc > 2) keys = std::atoi(argv[2]);

    PlantSpec spec;
    spec.n_runs = 64;
    spec.n_families = 4;
    spec.blocks_per_family = 4;
    spec.shared_trunk_blocks = 2;
    spec.slices_per_block = std::max(1, n_slices / (64 * (2 + 4)));
    spec.keys_per_slice = keys;
    spec.seed = 7;
    auto [cell, truth] = generate_cell(spec);

    std::vector<const SliceKeySet*> slices;
    for (const auto& run : cell.runs) {
        for (const auto& s : run.slices) {
            if (static_cast<int>(slices.size()) < n_slices) slices.push_back(&s);
        }
    }
    std::cout << "slices=" << slices.size() << " keys/slice=" << keys << "\n";

    const int k = 6;
    auto t0 = std::chrono::steady_clock::now();
    const auto parallel = knn_candidates_parallel(slices, k, Metric::jaccard);
    const double t_parallel = seconds_since(t0);
    std::cout << "parallel inverted-index kernel: " << t_parallel << " s\n";

    t0 = std::chrono::steady_clock::now();
    const auto serial = knn_candidates_serial(slices, k, Metric::jaccard);
    const double t_serial = seconds_since(t0);
    std::cout << "serial pairwise reference:      " << t_serial << " s\n";

    if (parallel != serial) {
        std::cout << "MISMATCH between kernels\n";
        return 1;
    }
    std::cout << "kernels agree; speedup x" << (t_serial / t_parallel) << "\n";
    return 0;
}
