#include "slicegraph/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace slicegraph {

std::string TypedState::name() const {
    if (terminal) return terminal_correct ? "EOS_correct" : "EOS_wrong";
    std::string s = role_name(role);
    s += posbin == PosBin::early ? "|early" : posbin == PosBin::mid ? "|mid" : "|late";
    s += in_core ? "|core" : "|off";
    return s;
}

TypedState eos_correct() {
    TypedState s;
    s.terminal = true;
    s.terminal_correct = true;
    return s;
}

TypedState eos_wrong() {
    TypedState s;
    s.terminal = true;
    return s;
}

PosBin position_bin(double tau) {
    if (tau <= 1.0 / 3.0) return PosBin::early;
    if (tau <= 2.0 / 3.0) return PosBin::mid;
    return PosBin::late;
}

std::vector<TypedState> lift_run(const RunRecord& run, const SliceGraph& graph,
                                 const BlockAtlas& atlas, const HighValueCore& cores) {
    // Graph node indices for this run's slices, in trace order.
    std::vector<std::pair<int, int>> path;  // (slice_index, node index)
    for (std::size_t v = 0; v < graph.nodes.size(); ++v) {
        if (graph.nodes[v].run_id == run.run_id) {
            path.emplace_back(graph.nodes[v].slice_index, static_cast<int>(v));
        }
    }
    std::sort(path.begin(), path.end());

    const int len = static_cast<int>(run.slices.size());
    std::vector<TypedState> seq;
    for (const auto& [slice_index, node] : path) {
        auto it = atlas.primary_block.find(node);
        if (it == atlas.primary_block.end()) continue;  // skipped before compaction
        const Block& block = atlas.block(it->second);
        TypedState state;
        state.role = block.role;
        state.posbin = position_bin(normalized_position(slice_index, len));
        state.in_core = cores.core_blocks.count(it->second) > 0;
        if (seq.empty() || !(seq.back() == state)) seq.push_back(state);
    }
    seq.push_back(run.correct ? eos_correct() : eos_wrong());
    return seq;
}

TypedSequences collect_sequences(const CellCache& cell, const SliceGraph& graph,
                                 const BlockAtlas& atlas, const HighValueCore& cores,
                                 const FamilyPartition& partition) {
    TypedSequences out;
    std::map<TypedState, int> index;
    std::map<int, std::vector<std::vector<TypedState>>> raw;
    for (const auto& run : cell.runs) {
        const auto seq = lift_run(run, graph, atlas, cores);
        if (seq.size() < 2) {  // terminal only: zero typed states
            ++out.n_excluded_runs;
            continue;
        }
        // Runs outside the correct-only partition are grouped under family -1
        // so their transitions still feed the pooled kernel.
        auto it = partition.family_of.find(run.run_id);
        const int family = it != partition.family_of.end() ? it->second : -1;
        raw[family].push_back(seq);
        for (const auto& s : seq) {
            if (!s.terminal) index.emplace(s, 0);
        }
    }
    int next = 0;
    for (auto& [state, idx] : index) idx = next++;
    out.alphabet.reserve(index.size() + 2);
    for (const auto& [state, idx] : index) out.alphabet.push_back(state);
    out.alphabet.push_back(eos_correct());
    out.alphabet.push_back(eos_wrong());
    index[eos_correct()] = next++;
    index[eos_wrong()] = next++;
    out.state_index = index;

    for (const auto& [family, seqs] : raw) {
        auto& encoded = out.by_family[family];
        for (const auto& seq : seqs) {
            std::vector<int> enc;
            enc.reserve(seq.size());
            for (const auto& s : seq) enc.push_back(index.at(s));
            encoded.push_back(std::move(enc));
        }
    }
    return out;
}

TypedKernelSet estimate_kernels(const TypedSequences& sequences, double alpha_smooth) {
    TypedKernelSet set;
    set.alphabet = sequences.alphabet;
    set.alpha_smooth = alpha_smooth;
    const std::size_t S = set.alphabet.size();

    for (const auto& [family, seqs] : sequences.by_family) {
        TypedKernel kernel;
        kernel.counts.assign(S, std::vector<long>(S, 0));
        long total = 0;
        for (const auto& seq : seqs) {
            for (std::size_t t = 0; t + 1 < seq.size(); ++t) {
                ++kernel.counts[static_cast<std::size_t>(seq[t])][static_cast<std::size_t>(seq[t + 1])];
                ++total;
            }
        }
        kernel.low_support = total == 0;
        kernel.probs.assign(S, std::vector<double>(S, 0.0));
        for (std::size_t i = 0; i < S; ++i) {
            if (set.alphabet[i].terminal) {
                kernel.probs[i][i] = 1.0;  // forced absorbing, identical across families
                continue;
            }
            long row_sum = 0;
            for (long c : kernel.counts[i]) row_sum += c;
            const double denom = static_cast<double>(row_sum) + alpha_smooth * static_cast<double>(S);
            for (std::size_t j = 0; j < S; ++j) {
                kernel.probs[i][j] = (static_cast<double>(kernel.counts[i][j]) + alpha_smooth) / denom;
            }
        }
        set.per_family[family] = std::move(kernel);
    }
    return set;
}

TypedKernel pooled_kernel(const TypedKernelSet& kernels) {
    const std::size_t S = kernels.alphabet.size();
    TypedKernel pooled;
    pooled.counts.assign(S, std::vector<long>(S, 0));
    long total = 0;
    for (const auto& [family, kernel] : kernels.per_family) {
        for (std::size_t i = 0; i < S; ++i) {
            for (std::size_t j = 0; j < S; ++j) {
                pooled.counts[i][j] += kernel.counts[i][j];
                total += kernel.counts[i][j];
            }
        }
    }
    pooled.low_support = total == 0;
    pooled.probs.assign(S, std::vector<double>(S, 0.0));
    for (std::size_t i = 0; i < S; ++i) {
        if (kernels.alphabet[i].terminal) {
            pooled.probs[i][i] = 1.0;
            continue;
        }
        long row_sum = 0;
        for (long c : pooled.counts[i]) row_sum += c;
        const double denom = static_cast<double>(row_sum) +
                             kernels.alpha_smooth * static_cast<double>(S);
        for (std::size_t j = 0; j < S; ++j) {
            pooled.probs[i][j] =
                (static_cast<double>(pooled.counts[i][j]) + kernels.alpha_smooth) / denom;
        }
    }
    return pooled;
}

std::optional<double> family_tv(const TypedKernel& a, const TypedKernel& b,
                                std::size_t alphabet_size, TvMode mode) {
    if (a.probs.size() != alphabet_size || b.probs.size() != alphabet_size) {
        throw ValidationError("family_tv: alphabet mismatch");
    }
    double sum = 0.0;
    std::size_t rows = 0;
    for (std::size_t i = 0; i < alphabet_size; ++i) {
        if (mode == TvMode::common_support) {
            long ca = 0, cb = 0;
            for (long v : a.counts[i]) ca += v;
            for (long v : b.counts[i]) cb += v;
            if (ca == 0 || cb == 0) continue;
        }
        double l1 = 0.0;
        for (std::size_t j = 0; j < alphabet_size; ++j) {
            l1 += std::abs(a.probs[i][j] - b.probs[i][j]);
        }
        sum += l1;
        ++rows;
    }
    if (mode == TvMode::common_support && rows == 0) return std::nullopt;
    const std::size_t denom = mode == TvMode::full ? alphabet_size : rows;
    return sum / (2.0 * static_cast<double>(denom));
}

std::vector<double> committor(const TypedKernel& pooled,
                              const std::vector<TypedState>& alphabet) {
    const std::size_t S = alphabet.size();
    std::vector<int> transient;
    int correct_idx = -1, wrong_idx = -1;
    for (std::size_t i = 0; i < S; ++i) {
        if (!alphabet[i].terminal) {
            transient.push_back(static_cast<int>(i));
        } else if (alphabet[i].terminal_correct) {
            correct_idx = static_cast<int>(i);
        } else {
            wrong_idx = static_cast<int>(i);
        }
    }
    const std::size_t T = transient.size();
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(static_cast<long>(T), static_cast<long>(T));
    Eigen::VectorXd r(static_cast<long>(T));
    for (std::size_t a = 0; a < T; ++a) {
        for (std::size_t b = 0; b < T; ++b) {
            A(static_cast<long>(a), static_cast<long>(b)) -=
                pooled.probs[static_cast<std::size_t>(transient[a])][static_cast<std::size_t>(transient[b])];
        }
        r(static_cast<long>(a)) =
            pooled.probs[static_cast<std::size_t>(transient[a])][static_cast<std::size_t>(correct_idx)];
    }
    const Eigen::VectorXd q = A.partialPivLu().solve(r);

    std::vector<double> out(S, 0.0);
    for (std::size_t a = 0; a < T; ++a) {
        out[static_cast<std::size_t>(transient[a])] = q(static_cast<long>(a));
    }
    if (correct_idx >= 0) out[static_cast<std::size_t>(correct_idx)] = 1.0;
    if (wrong_idx >= 0) out[static_cast<std::size_t>(wrong_idx)] = 0.0;
    return out;
}

EscapeMfpt escape_and_mfpt(const TypedKernel& pooled, const std::vector<TypedState>& alphabet,
                           const TypedSequences& sequences) {
    EscapeMfpt result;
    const std::size_t S = alphabet.size();
    std::vector<char> in_core(S, 0);
    bool any_core = false;
    for (std::size_t i = 0; i < S; ++i) {
        if (!alphabet[i].terminal && alphabet[i].in_core) {
            in_core[i] = 1;
            any_core = true;
        }
    }
    result.mfpt.assign(S, -1.0);
    if (!any_core) return result;
    result.defined = true;

    // Empirical core occupancy over compacted sequences.
    std::vector<double> occupancy(S, 0.0);
    double occ_total = 0.0;
    for (const auto& [family, seqs] : sequences.by_family) {
        for (const auto& seq : seqs) {
            for (int s : seq) {
                if (in_core[static_cast<std::size_t>(s)]) {
                    occupancy[static_cast<std::size_t>(s)] += 1.0;
                    occ_total += 1.0;
                }
            }
        }
    }

    // Three-step escape: P^3 row mass outside the core.
    Eigen::MatrixXd P(static_cast<long>(S), static_cast<long>(S));
    for (std::size_t i = 0; i < S; ++i) {
        for (std::size_t j = 0; j < S; ++j) {
            P(static_cast<long>(i), static_cast<long>(j)) = pooled.probs[i][j];
        }
    }
    const Eigen::MatrixXd P3 = P * P * P;
    if (occ_total > 0.0) {
        for (std::size_t i = 0; i < S; ++i) {
            if (!in_core[i] || occupancy[i] == 0.0) continue;
            double out_mass = 0.0;
            for (std::size_t j = 0; j < S; ++j) {
                if (!in_core[j]) out_mass += P3(static_cast<long>(i), static_cast<long>(j));
            }
            result.three_step_hazard += occupancy[i] / occ_total * out_mass;
        }
    }

    // MFPT to the core, core absorbing; terminal columns dropped, so the
    // system is strictly substochastic and invertible.
    std::vector<int> transient;
    for (std::size_t i = 0; i < S; ++i) {
        if (!alphabet[i].terminal && !in_core[i]) transient.push_back(static_cast<int>(i));
    }
    const std::size_t T = transient.size();
    if (T > 0) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Identity(static_cast<long>(T), static_cast<long>(T));
        for (std::size_t a = 0; a < T; ++a) {
            for (std::size_t b = 0; b < T; ++b) {
                A(static_cast<long>(a), static_cast<long>(b)) -=
                    pooled.probs[static_cast<std::size_t>(transient[a])]
                                [static_cast<std::size_t>(transient[b])];
            }
        }
        const Eigen::VectorXd t =
            A.partialPivLu().solve(Eigen::VectorXd::Ones(static_cast<long>(T)));
        for (std::size_t a = 0; a < T; ++a) {
            result.mfpt[static_cast<std::size_t>(transient[a])] = t(static_cast<long>(a));
        }
    }
    for (std::size_t i = 0; i < S; ++i) {
        if (in_core[i]) result.mfpt[i] = 0.0;
    }
    return result;
}

}  // namespace slicegraph
