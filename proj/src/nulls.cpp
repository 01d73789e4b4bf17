#include "slicegraph/nulls.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace slicegraph {

std::string null_kind_name(NullKind kind) {
    switch (kind) {
        case NullKind::degree_rewire: return "degree_rewire";
        case NullKind::blocktype_rewire: return "blocktype_rewire";
        case NullKind::family_label_shuffle: return "family_label_shuffle";
        case NullKind::temporal_shuffle: return "temporal_shuffle";
        case NullKind::label_permutation: return "label_permutation";
    }
    return "unknown";
}

int NullSpec::effective_shuffles() const {
    if (shuffles > 0) return shuffles;
    switch (kind) {
        case NullKind::degree_rewire:
        case NullKind::blocktype_rewire: return 3;
        case NullKind::family_label_shuffle:
        case NullKind::temporal_shuffle: return 200;
        case NullKind::label_permutation: return 100;
    }
    return 0;
}

NullResult summarize_null(double real, const std::vector<double>& null_values) {
    NullResult r;
    r.real = real;
    r.shuffles = static_cast<int>(null_values.size());
    if (null_values.empty()) return r;
    const double n = static_cast<double>(null_values.size());
    r.null_mean = std::accumulate(null_values.begin(), null_values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : null_values) ss += (v - r.null_mean) * (v - r.null_mean);
    r.null_sd = null_values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    r.z = r.null_sd > 0.0 ? (real - r.null_mean) / r.null_sd : 0.0;
    std::vector<double> sorted = null_values;
    std::sort(sorted.begin(), sorted.end());
    const auto rank = static_cast<std::size_t>(
        std::max<long>(1, static_cast<long>(std::ceil(0.95 * n))));
    r.p95 = sorted[rank - 1];
    r.above_p95 = real > r.p95;
    return r;
}

RewiredGraph degree_preserving_rewire(const SliceGraph& graph, std::uint64_t seed) {
    RewiredGraph out;
    out.graph = graph;
    auto& edges = out.graph.edges;
    const std::size_t E = edges.size();
    if (E < 2) {
        out.identity = true;
        return out;
    }
    std::set<std::pair<int, int>> present;
    for (const auto& e : edges) present.emplace(e.a, e.b);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, E - 1);
    std::uniform_int_distribution<int> coin(0, 1);
    const long attempts = 10 * static_cast<long>(E);
    for (long t = 0; t < attempts; ++t) {
        const std::size_t i = pick(rng);
        const std::size_t j = pick(rng);
        if (i == j) continue;
        int a = edges[i].a, b = edges[i].b;
        int c = edges[j].a, d = edges[j].b;
        if (coin(rng)) std::swap(c, d);  // both pairings reachable
        // Proposed replacement: (a,d) and (c,b).
        if (a == d || c == b) continue;
        const auto na = std::minmax(a, d);
        const auto nb = std::minmax(c, b);
        if (na == nb) continue;
        if (present.count({na.first, na.second}) || present.count({nb.first, nb.second})) continue;
        present.erase({edges[i].a, edges[i].b});
        present.erase({edges[j].a, edges[j].b});
        edges[i].a = na.first;
        edges[i].b = na.second;
        edges[j].a = nb.first;
        edges[j].b = nb.second;
        present.emplace(na.first, na.second);
        present.emplace(nb.first, nb.second);
        ++out.accepted_swaps;
    }
    out.identity = out.accepted_swaps == 0;
    return out;
}

int size_band(int block_size) {
    if (block_size <= 5) return 0;
    if (block_size <= 10) return 1;
    if (block_size <= 20) return 2;
    return 3;
}

int coverage_band(double coverage) {
    const int band = static_cast<int>(coverage * 4.0);
    return std::clamp(band, 0, 3);
}

BlockAtlas blocktype_preserving_rewire(const BlockAtlas& atlas, std::uint64_t seed) {
    BlockAtlas out = atlas;
    std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < out.blocks.size(); ++i) {
        if (out.blocks[i].is_trivial) continue;
        strata[{size_band(static_cast<int>(out.blocks[i].size())),
                coverage_band(out.blocks[i].coverage)}]
            .push_back(i);
    }
    std::mt19937_64 rng(seed);
    for (auto& [key, members] : strata) {
        std::vector<BlockRole> roles;
        roles.reserve(members.size());
        for (std::size_t i : members) roles.push_back(out.blocks[i].role);
        std::shuffle(roles.begin(), roles.end(), rng);
        for (std::size_t k = 0; k < members.size(); ++k) out.blocks[members[k]].role = roles[k];
    }
    return out;
}

FamilyPartition family_label_shuffle(const FamilyPartition& partition, std::uint64_t seed) {
    FamilyPartition out = partition;
    std::vector<int> labels;
    labels.reserve(out.family_of.size());
    for (const auto& [run, family] : out.family_of) labels.push_back(family);
    std::mt19937_64 rng(seed);
    std::shuffle(labels.begin(), labels.end(), rng);
    std::size_t k = 0;
    for (auto& [run, family] : out.family_of) family = labels[k++];
    return out;
}

TypedSequences temporal_shuffle(const TypedSequences& sequences,
                                const std::vector<TypedState>& alphabet, std::uint64_t seed) {
    TypedSequences out = sequences;
    std::mt19937_64 rng(seed);
    for (auto& [family, seqs] : out.by_family) {
        for (auto& seq : seqs) {
            if (seq.empty()) continue;
            const int terminal = seq.back();
            std::vector<int> states(seq.begin(), seq.end() - 1);
            std::shuffle(states.begin(), states.end(), rng);
            seq.clear();
            for (int s : states) {
                if (alphabet[static_cast<std::size_t>(s)].terminal) continue;
                if (seq.empty() || seq.back() != s) seq.push_back(s);
            }
            seq.push_back(terminal);
        }
    }
    return out;
}

CellCache label_permutation(const CellCache& cell, std::uint64_t seed) {
    CellCache out = cell;
    std::vector<std::size_t> order(out.runs.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < order.size(); ++i) {
        out.runs[i].correct = cell.runs[order[i]].correct;
        out.runs[i].answer_class = cell.runs[order[i]].answer_class;
    }
    return out;
}

BootstrapCi clustered_bootstrap(const std::vector<double>& values,
                                const std::vector<int>& problem_ids, int B,
                                std::uint64_t seed) {
    if (values.size() != problem_ids.size() || values.empty()) {
        throw ValidationError("clustered_bootstrap: values/problem_ids mismatch or empty");
    }
    std::map<int, std::vector<double>> by_problem;
    for (std::size_t i = 0; i < values.size(); ++i) by_problem[problem_ids[i]].push_back(values[i]);
    std::vector<const std::vector<double>*> problems;
    problems.reserve(by_problem.size());
    for (const auto& [pid, vals] : by_problem) problems.push_back(&vals);

    BootstrapCi ci;
    ci.B = B;
    ci.mean = std::accumulate(values.begin(), values.end(), 0.0) /
              static_cast<double>(values.size());

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, problems.size() - 1);
    std::vector<double> means;
    means.reserve(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) {
        double sum = 0.0;
        long count = 0;
        for (std::size_t p = 0; p < problems.size(); ++p) {
            const auto& vals = *problems[pick(rng)];
            sum = std::accumulate(vals.begin(), vals.end(), sum);
            count += static_cast<long>(vals.size());
        }
        means.push_back(sum / static_cast<double>(count));
    }
    std::sort(means.begin(), means.end());
    const auto order_stat = [&](double q) {
        const auto rank = static_cast<std::size_t>(
            std::max<long>(1, static_cast<long>(std::ceil(q * static_cast<double>(B)))));
        return means[std::min(rank - 1, means.size() - 1)];
    };
    ci.lo = order_stat(0.025);
    ci.hi = order_stat(0.975);
    return ci;
}

std::vector<bool> bh_fdr(const std::vector<double>& p_values, double q) {
    const std::size_t m = p_values.size();
    std::vector<bool> reject(m, false);
    if (m == 0) return reject;
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
    long k = -1;
    for (std::size_t i = 0; i < m; ++i) {
        const double threshold = static_cast<double>(i + 1) * q / static_cast<double>(m);
        if (p_values[order[i]] <= threshold) k = static_cast<long>(i);
    }
    for (long i = 0; i <= k; ++i) reject[order[static_cast<std::size_t>(i)]] = true;
    return reject;
}

}  // namespace slicegraph
