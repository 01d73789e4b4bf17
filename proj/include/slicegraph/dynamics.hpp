#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slicegraph/atlas.hpp"
#include "slicegraph/cache.hpp"
#include "slicegraph/families.hpp"
#include "slicegraph/reward.hpp"

namespace slicegraph {

enum class PosBin { early, mid, late };

/// (role, position third, core flag), or an absorbing terminal.
struct TypedState {
    bool terminal = false;
    bool terminal_correct = false;  // EOS_correct vs EOS_wrong
    BlockRole role = BlockRole::intermediate;
    PosBin posbin = PosBin::early;
    bool in_core = false;

    auto operator<=>(const TypedState&) const = default;
    std::string name() const;
};

TypedState eos_correct();
TypedState eos_wrong();

/// Normalized position thirds; boundaries at 1/3 and 2/3 go to the lower bin.
PosBin position_bin(double tau);

/// Lifts one run to its compacted typed-state chain: slices without a
/// non-trivial primary block are skipped, consecutive duplicates merged, the
/// run-label terminal appended.  Returns just the terminal for runs with no
/// typed states (such runs are excluded from kernel estimation).
std::vector<TypedState> lift_run(const RunRecord& run, const SliceGraph& graph,
                                 const BlockAtlas& atlas, const HighValueCore& cores);

/// Shared per-cell alphabet (observed non-terminals, then both terminals) and
/// family-grouped compacted sequences.
struct TypedSequences {
    std::vector<TypedState> alphabet;                  // terminals last
    std::map<TypedState, int> state_index;
    std::map<int, std::vector<std::vector<int>>> by_family;  // family -> encoded sequences
    int n_excluded_runs = 0;                           // runs with zero typed states
};

TypedSequences collect_sequences(const CellCache& cell, const SliceGraph& graph,
                                 const BlockAtlas& atlas, const HighValueCore& cores,
                                 const FamilyPartition& partition);

struct TypedKernel {
    std::vector<std::vector<long>> counts;
    std::vector<std::vector<double>> probs;  // Laplace-smoothed, rows sum to 1
    bool low_support = false;                // zero transitions observed
};

struct TypedKernelSet {
    std::vector<TypedState> alphabet;
    std::map<int, TypedKernel> per_family;
    double alpha_smooth = 0.5;
};

/// Laplace-smoothed per-family kernels; terminal rows forced self-absorbing
/// and identical across families.
TypedKernelSet estimate_kernels(const TypedSequences& sequences, double alpha_smooth = 0.5);

/// Kernel from counts summed over all families.
TypedKernel pooled_kernel(const TypedKernelSet& kernels);

enum class TvMode { full, common_support };

/// Row-averaged total variation; common_support restricts to rows with raw
/// outgoing counts > 0 in both families, returning nullopt when no row is
/// shared.
std::optional<double> family_tv(const TypedKernel& a, const TypedKernel& b,
                                std::size_t alphabet_size, TvMode mode = TvMode::full);

/// Committor to EOS_correct per transient state, solving (I - Q) q = r_A.
std::vector<double> committor(const TypedKernel& pooled,
                              const std::vector<TypedState>& alphabet);

struct EscapeMfpt {
    double three_step_hazard = 0.0;              // h3 over empirical core occupancy
    std::vector<double> mfpt;                    // per state; 0 inside the core
    bool defined = false;                        // false when the core is empty
};

/// Three-step escape hazard from the core and mean first-passage times to the
/// core (core treated as absorbing; terminals excluded from the transient
/// system, so passages absorbed at a terminal count until absorption).
EscapeMfpt escape_and_mfpt(const TypedKernel& pooled, const std::vector<TypedState>& alphabet,
                           const TypedSequences& sequences);

}  // namespace slicegraph
