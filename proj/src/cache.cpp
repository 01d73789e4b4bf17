#include "slicegraph/cache.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace slicegraph {

using nlohmann::json;

double silu(double x) { return x / (1.0 + std::exp(-x)); }

std::vector<ScoredKey> score_token_activations(const std::vector<double>& up,
                                               const std::vector<double>& gate,
                                               std::uint32_t layer,
                                               int global_topk,
                                               const GateFn& phi) {
    if (up.size() != gate.size()) {
        throw ValidationError("score_token_activations: up/gate length mismatch");
    }
    if (layer >= 0x10000u) throw ValidationError("layer index does not fit in 16 bits");
    if (up.size() > 0x10000u) throw ValidationError("unit count exceeds 16-bit key space");

    std::vector<ScoredKey> scored;
    scored.reserve(up.size());
    for (std::size_t j = 0; j < up.size(); ++j) {
        double a = std::max(0.0, phi(gate[j]) * up[j]);
        if (a > 0.0) {
            scored.emplace_back(make_neuron_key(layer, static_cast<std::uint32_t>(j)), a);
        }
    }
    // Larger score first; equal scores prefer the smaller key (= smaller unit).
    std::sort(scored.begin(), scored.end(), [](const ScoredKey& a, const ScoredKey& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(scored.size()) > global_topk) {
        scored.resize(static_cast<std::size_t>(global_topk));
    }
    return scored;
}

namespace {

// Keeps the topk largest-mass entries of a key->mass map, ties to smaller key,
// and returns them as a sorted key list (masses preserved for later merging).
std::vector<ScoredKey> truncate_mass(std::unordered_map<NeuronKey, double>& mass, int topk) {
    std::vector<ScoredKey> entries(mass.begin(), mass.end());
    std::sort(entries.begin(), entries.end(), [](const ScoredKey& a, const ScoredKey& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(entries.size()) > topk) {
        entries.resize(static_cast<std::size_t>(topk));
    }
    std::sort(entries.begin(), entries.end(),
              [](const ScoredKey& a, const ScoredKey& b) { return a.first < b.first; });
    return entries;
}

}  // namespace

std::vector<SliceKeySet> aggregate_rows(
    const std::vector<std::vector<ScoredKey>>& token_scores,
    const AggregationConfig& config) {
    config.validate();
    const std::size_t n_tokens = token_scores.size();
    const std::size_t row_len = static_cast<std::size_t>(config.slice_size);
    const std::size_t n_rows = (n_tokens + row_len - 1) / row_len;

    // Row stage: sum per-key mass within each row, truncate to slice_topk.
    std::vector<std::vector<ScoredKey>> rows(n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) {
        std::unordered_map<NeuronKey, double> mass;
        const std::size_t t0 = r * row_len;
        const std::size_t t1 = std::min(n_tokens, t0 + row_len);
        for (std::size_t t = t0; t < t1; ++t) {
            for (const auto& [k, a] : token_scores[t]) mass[k] += a;
        }
        rows[r] = truncate_mass(mass, config.slice_topk);
    }

    // Merge stage: sum masses across sep_up consecutive rows, re-truncate.
    const std::size_t sep = static_cast<std::size_t>(config.sep_up);
    const std::size_t n_slices = (n_rows + sep - 1) / sep;
    std::vector<SliceKeySet> out(n_slices);
    for (std::size_t s = 0; s < n_slices; ++s) {
        std::unordered_map<NeuronKey, double> mass;
        const std::size_t r0 = s * sep;
        const std::size_t r1 = std::min(n_rows, r0 + sep);
        for (std::size_t r = r0; r < r1; ++r) {
            for (const auto& [k, a] : rows[r]) mass[k] += a;
        }
        auto kept = truncate_mass(mass, config.slice_topk);
        out[s].slice_index = static_cast<int>(s);
        out[s].keys.reserve(kept.size());
        for (const auto& [k, a] : kept) out[s].keys.push_back(k);
    }
    return out;
}

CellCache assemble_cell(CellId id, AggregationConfig config, std::vector<RunRecord> runs) {
    config.validate();
    CellCache cell;
    cell.cell_id = std::move(id);
    cell.config = config;

    std::unordered_set<std::int64_t> seen;
    for (auto& run : runs) {
        if (!seen.insert(run.run_id).second) {
            throw ValidationError("duplicate run_id in cell");
        }
        if (run.correct && run.answer_class.empty()) {
            throw ValidationError("correct run with empty answer_class");
        }
        std::vector<SliceKeySet> kept;
        kept.reserve(run.slices.size());
        for (auto& s : run.slices) {
            if (s.keys.empty()) {
                ++cell.dropped_slices;
                continue;
            }
            if (!std::is_sorted(s.keys.begin(), s.keys.end()) ||
                std::adjacent_find(s.keys.begin(), s.keys.end()) != s.keys.end()) {
                throw ValidationError("slice keys must be strictly increasing");
            }
            s.run_id = run.run_id;
            s.slice_index = static_cast<int>(kept.size());
            kept.push_back(std::move(s));
        }
        if (kept.empty()) {
            ++cell.dropped_runs;  // graph-valid filter
            continue;
        }
        run.slices = std::move(kept);
        cell.runs.push_back(std::move(run));
    }
    return cell;
}

namespace {

constexpr char kMagic[8] = {'S', 'L', 'G', 'C', 'A', 'C', 'H', 'E'};
constexpr std::uint8_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw FormatError("truncated cache file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

json config_to_json(const AggregationConfig& c) {
    return json{{"slice_size", c.slice_size}, {"sep_up", c.sep_up},
                {"global_topk", c.global_topk}, {"slice_topk", c.slice_topk},
                {"k_neighbors", c.k_neighbors}, {"sigma", c.sigma},
                {"size_cap", c.size_cap}};
}

AggregationConfig config_from_json(const json& j) {
    AggregationConfig c;
    c.slice_size = j.at("slice_size").get<int>();
    c.sep_up = j.at("sep_up").get<int>();
    c.global_topk = j.at("global_topk").get<int>();
    c.slice_topk = j.at("slice_topk").get<int>();
    c.k_neighbors = j.at("k_neighbors").get<int>();
    c.sigma = j.at("sigma").get<double>();
    c.size_cap = j.at("size_cap").get<int>();
    c.validate();
    return c;
}

json manifest_json(const CellCache& cell) {
    json runs = json::array();
    for (const auto& r : cell.runs) {
        runs.push_back(json{{"run_id", r.run_id},
                            {"correct", r.correct},
                            {"answer_class", r.answer_class},
                            {"n_slices", r.slices.size()}});
    }
    return json{{"cell_id", {{"problem_id", cell.cell_id.problem_id},
                             {"model_id", cell.cell_id.model_id}}},
                {"config", config_to_json(cell.config)},
                {"runs", runs},
                {"dropped_runs", cell.dropped_runs},
                {"dropped_slices", cell.dropped_slices}};
}

CellCache cell_from_manifest(const json& m) {
    CellCache cell;
    cell.cell_id.problem_id = m.at("cell_id").at("problem_id").get<std::string>();
    cell.cell_id.model_id = m.at("cell_id").at("model_id").get<std::string>();
    cell.config = config_from_json(m.at("config"));
    cell.dropped_runs = m.at("dropped_runs").get<int>();
    cell.dropped_slices = m.at("dropped_slices").get<int>();
    std::unordered_set<std::int64_t> seen;
    for (const auto& jr : m.at("runs")) {
        RunRecord run;
        run.run_id = jr.at("run_id").get<std::int64_t>();
        run.correct = jr.at("correct").get<bool>();
        run.answer_class = jr.at("answer_class").get<std::string>();
        if (!seen.insert(run.run_id).second) throw ValidationError("duplicate run_id in manifest");
        run.slices.resize(jr.at("n_slices").get<std::size_t>());
        cell.runs.push_back(std::move(run));
    }
    return cell;
}

}  // namespace

void write_cache(const CellCache& cell, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open for write: " + path);
    os.write(kMagic, 8);
    os.put(static_cast<char>(kVersion));
    const std::string manifest = manifest_json(cell).dump();
    put_u32(os, static_cast<std::uint32_t>(manifest.size()));
    os.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
    for (const auto& run : cell.runs) {
        for (const auto& s : run.slices) {
            put_u32(os, static_cast<std::uint32_t>(s.keys.size()));
            for (NeuronKey k : s.keys) put_u32(os, k);
        }
    }
    if (!os) throw FormatError("write failed: " + path);
}

CellCache read_cache(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open for read: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0) throw FormatError("bad cache magic");
    const int version = is.get();
    if (version != kVersion) throw FormatError("unsupported cache version");
    const std::uint32_t mlen = get_u32(is);
    std::string manifest(mlen, '\0');
    is.read(manifest.data(), mlen);
    if (!is) throw FormatError("truncated manifest");
    json m;
    try {
        m = json::parse(manifest);
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad manifest JSON: ") + e.what());
    }
    CellCache cell = cell_from_manifest(m);
    for (auto& run : cell.runs) {
        for (std::size_t i = 0; i < run.slices.size(); ++i) {
            auto& s = run.slices[i];
            s.run_id = run.run_id;
            s.slice_index = static_cast<int>(i);
            const std::uint32_t n = get_u32(is);
            s.keys.resize(n);
            for (std::uint32_t j = 0; j < n; ++j) s.keys[j] = get_u32(is);
            if (s.keys.empty()) throw ValidationError("empty slice in cache body");
            if (!std::is_sorted(s.keys.begin(), s.keys.end()) ||
                std::adjacent_find(s.keys.begin(), s.keys.end()) != s.keys.end()) {
                throw ValidationError("slice keys not strictly increasing");
            }
        }
    }
    return cell;
}

void write_cache_json(const CellCache& cell, const std::string& path) {
    json j = manifest_json(cell);
    std::size_t ri = 0;
    for (const auto& run : cell.runs) {
        json slices = json::array();
        for (const auto& s : run.slices) {
            json keys = json::array();
            for (NeuronKey k : s.keys) {
                keys.push_back(json{{"layer", key_layer(k)}, {"unit", key_unit(k)}});
            }
            slices.push_back(std::move(keys));
        }
        j["runs"][ri++]["slices"] = std::move(slices);
    }
    std::ofstream os(path);
    if (!os) throw FormatError("cannot open for write: " + path);
    os << j.dump(2) << '\n';
}

CellCache read_cache_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open for read: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad cache JSON: ") + e.what());
    }
    CellCache cell = cell_from_manifest(j);
    std::size_t ri = 0;
    for (auto& run : cell.runs) {
        const json& slices = j.at("runs").at(ri++).at("slices");
        if (slices.size() != run.slices.size()) throw ValidationError("slice count mismatch");
        for (std::size_t i = 0; i < run.slices.size(); ++i) {
            auto& s = run.slices[i];
            s.run_id = run.run_id;
            s.slice_index = static_cast<int>(i);
            for (const auto& jk : slices.at(i)) {
                s.keys.push_back(make_neuron_key(jk.at("layer").get<std::uint32_t>(),
                                                 jk.at("unit").get<std::uint32_t>()));
            }
            std::sort(s.keys.begin(), s.keys.end());
            if (std::adjacent_find(s.keys.begin(), s.keys.end()) != s.keys.end()) {
                throw ValidationError("duplicate keys in slice");
            }
            if (s.keys.empty()) throw ValidationError("empty slice in JSON cache");
        }
    }
    return cell;
}

}  // namespace slicegraph
