#include "tse/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;

namespace tse {

LazyPolicy::Mode lazy_mode_from_name(const std::string& name) {
    if (name == "honest") return LazyPolicy::Mode::honest;
    if (name == "random" || name == "random_data") return LazyPolicy::Mode::random_data;
    if (name == "historical" || name == "historical_data") return LazyPolicy::Mode::historical_data;
    throw ConfigError("unknown lazy mode '" + name + "' (honest, random, historical)");
}

std::string lazy_mode_name(LazyPolicy::Mode mode) {
    switch (mode) {
        case LazyPolicy::Mode::honest: return "honest";
        case LazyPolicy::Mode::random_data: return "random";
        case LazyPolicy::Mode::historical_data: return "historical";
    }
    return "honest";
}

Tensor TrafficDataset::segment_truth(const Segment& seg) const {
    Tensor out({T, tau_i, seg.size(), s});
    for (size_t t = 0; t < T; ++t) {
        for (size_t lag = 0; lag < tau_i; ++lag) {
            const size_t src = (t + T - tau_i + lag) % T;
            for (size_t i = 0; i < seg.size(); ++i) {
                const size_t road = seg.road_indices[i];
                for (size_t st = 0; st < s; ++st) {
                    out.at4(t, lag, i, st) = labels.at4(src, 0, road, st);
                }
            }
        }
    }
    return out;
}

bool TrafficDataset::operator==(const TrafficDataset& other) const {
    if (T != other.T || delta_t != other.delta_t || tau_i != other.tau_i ||
        tau_o != other.tau_o || s != other.s || providers != other.providers ||
        seed != other.seed || network.intersections != other.network.intersections ||
        network.roads != other.network.roads) {
        return false;
    }
    if (network.segments.size() != other.network.segments.size()) return false;
    for (size_t k = 0; k < network.segments.size(); ++k) {
        if (network.segments[k].road_indices != other.network.segments[k].road_indices) return false;
    }
    if (!(labels == other.labels)) return false;
    if (views.size() != other.views.size()) return false;
    for (size_t k = 0; k < views.size(); ++k) {
        if (views[k].size() != other.views[k].size()) return false;
        for (size_t n = 0; n < views[k].size(); ++n) {
            if (!(views[k][n] == other.views[k][n])) return false;
        }
    }
    return true;
}

namespace {

// circular [1/4, 1/2, 1/4] smoothing pass
void smooth_circular(std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<double> out(n);
    for (size_t t = 0; t < n; ++t) {
        out[t] = 0.25 * v[(t + n - 1) % n] + 0.5 * v[t] + 0.25 * v[(t + 1) % n];
    }
    v = std::move(out);
}

std::vector<double> raw_process(size_t T, Rng& rng, const DynamicsParams& dyn) {
    std::vector<double> base(T, 0.0);
    for (size_t h = 0; h < dyn.harmonic_cycles.size(); ++h) {
        const double phase = rng.uniform(0.0, 6.283185307179586);
        const double amp = dyn.harmonic_amps[h];
        const double w = 6.283185307179586 * dyn.harmonic_cycles[h] / static_cast<double>(T);
        for (size_t t = 0; t < T; ++t) base[t] += amp * std::sin(w * static_cast<double>(t) + phase);
    }
    std::vector<double> noise(T);
    for (double& x : noise) x = rng.normal();
    for (int p = 0; p < dyn.noise_smooth_passes; ++p) smooth_circular(noise);
    for (size_t t = 0; t < T; ++t) base[t] += dyn.noise_scale * noise[t];
    return base;
}

void zscore(std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    const double sd = std::sqrt(std::max(var, 1e-12));
    for (double& x : v) x = (x - mean) / sd;
}

}  // namespace

TrafficDataset generate_synthetic(const RoadNetwork& network, size_t T, uint64_t seed,
                                  const GenerateOptions& opts) {
    network.validate();
    const size_t min_t = opts.tau_i + opts.tau_o;
    if (T < min_t) {
        throw ConfigError("T must be >= " + std::to_string(min_t) + " (got " + std::to_string(T) + ")");
    }

    const size_t E = network.road_count();
    const size_t S = 2;

    // independent smooth processes per (road, state)
    std::vector<std::vector<double>> proc(E * S);
    for (size_t e = 0; e < E; ++e) {
        for (size_t st = 0; st < S; ++st) {
            Rng rng(derive_seed(seed, "road-process", e * S + st));
            proc[e * S + st] = raw_process(T, rng, opts.dynamics);
        }
    }

    // couple density to flow
    std::vector<std::vector<double>> series(E * S);
    for (size_t e = 0; e < E; ++e) {
        series[e * S + 0] = proc[e * S + 0];
        series[e * S + 1].resize(T);
        const double c = opts.dynamics.state_coupling;
        for (size_t t = 0; t < T; ++t) {
            series[e * S + 1][t] = c * proc[e * S + 0][t] + (1.0 - c) * proc[e * S + 1][t];
        }
    }

    // spatial smoothing over road neighbors
    const auto adj = network.road_adjacency();
    for (int pass = 0; pass < opts.dynamics.spatial_passes; ++pass) {
        std::vector<std::vector<double>> next = series;
        for (size_t e = 0; e < E; ++e) {
            if (adj[e].empty()) continue;
            for (size_t st = 0; st < S; ++st) {
                for (size_t t = 0; t < T; ++t) {
                    double nb = 0.0;
                    for (size_t o : adj[e]) nb += series[o * S + st][t];
                    nb /= static_cast<double>(adj[e].size());
                    next[e * S + st][t] = (1.0 - opts.dynamics.spatial_mix) * series[e * S + st][t] +
                                          opts.dynamics.spatial_mix * nb;
                }
            }
        }
        series = std::move(next);
    }

    for (auto& v : series) {
        zscore(v);
        for (double& x : v) x = round9(x);
    }

    TrafficDataset ds;
    ds.network = network;
    ds.T = T;
    ds.delta_t = opts.delta_t;
    ds.tau_i = opts.tau_i;
    ds.tau_o = opts.tau_o;
    ds.s = S;
    ds.providers = opts.providers;
    ds.seed = seed;

    ds.labels = Tensor({T, ds.tau_o, E, S});
    for (size_t t = 0; t < T; ++t) {
        for (size_t j = 0; j < ds.tau_o; ++j) {
            const size_t src = (t + j) % T;
            for (size_t e = 0; e < E; ++e) {
                for (size_t st = 0; st < S; ++st) {
                    ds.labels.at4(t, j, e, st) = series[e * S + st][src];
                }
            }
        }
    }

    ds.views.resize(network.segment_count());
    ds.view_noise.resize(network.segment_count());
    for (size_t k = 0; k < network.segment_count(); ++k) {
        const Tensor truth = ds.segment_truth(network.segments[k]);
        ds.views[k].assign(ds.providers, truth);
        ds.view_noise[k].assign(ds.providers, NoiseProfile{});
    }
    return ds;
}

Tensor derive_provider_view(const TrafficDataset& ds, const Segment& segment,
                            const NoiseProfile& noise) {
    if (segment.id >= ds.network.segment_count() ||
        ds.network.segments[segment.id].road_indices != segment.road_indices) {
        throw ConfigError("segment " + std::to_string(segment.id) +
                          " does not belong to the dataset's network");
    }
    if (noise.sigma < 0.0) throw ConfigError("noise sigma must be >= 0");

    Tensor view = ds.segment_truth(segment);
    Rng rng(derive_seed(noise.seed, "provider-noise", segment.id));
    for (double& v : view.data) {
        const double z = rng.normal();
        v = round9(v + noise.mu + noise.sigma * z);
    }
    return view;
}

void apply_noise_profiles(TrafficDataset& ds,
                          const std::vector<std::vector<NoiseProfile>>& profiles) {
    if (profiles.size() != ds.segment_count()) {
        throw ConfigError("noise profile table has " + std::to_string(profiles.size()) +
                          " rows, expected " + std::to_string(ds.segment_count()));
    }
    for (size_t k = 0; k < profiles.size(); ++k) {
        if (profiles[k].size() != ds.providers) {
            throw ConfigError("noise profile row " + std::to_string(k) + " has " +
                              std::to_string(profiles[k].size()) + " entries, expected " +
                              std::to_string(ds.providers));
        }
        for (size_t n = 0; n < ds.providers; ++n) {
            ds.views[k][n] = derive_provider_view(ds, ds.network.segments[k], profiles[k][n]);
            ds.view_noise[k][n] = profiles[k][n];
        }
    }
}

Tensor apply_lazy_policy(const Tensor& view, const LazyPolicy& policy, const Tensor* history,
                         uint64_t seed) {
    if (policy.lazy_fraction < 0.0 || policy.lazy_fraction > 1.0) {
        throw ConfigError("lazy_fraction must be in [0,1]");
    }
    if (policy.mode == LazyPolicy::Mode::honest) return view;
    if (policy.mode == LazyPolicy::Mode::historical_data) {
        if (history == nullptr) {
            throw ConfigError("historical_data lazy mode requires a history tensor");
        }
        if (history->shape != view.shape) {
            throw ConfigError("history tensor shape does not match the view");
        }
    }

    const size_t T = view.shape[0];
    const size_t slice = view.size() / T;
    const size_t count = static_cast<size_t>(std::ceil(policy.lazy_fraction * static_cast<double>(T)));

    Rng rng(derive_seed(seed, "lazy-policy"));
    const std::vector<size_t> perm = rng.permutation(T);

    Tensor out = view;
    if (policy.mode == LazyPolicy::Mode::random_data) {
        double lo = view.data[0], hi = view.data[0];
        for (double v : view.data) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        for (size_t i = 0; i < count; ++i) {
            const size_t t = perm[i];
            for (size_t j = 0; j < slice; ++j) out.data[t * slice + j] = rng.uniform(lo, hi);
        }
    } else {
        for (size_t i = 0; i < count; ++i) {
            const size_t t = perm[i];
            for (size_t j = 0; j < slice; ++j) out.data[t * slice + j] = history->data[t * slice + j];
        }
    }
    return out;
}

Tensor make_history(const Tensor& view, size_t lag) {
    const size_t T = view.shape[0];
    const size_t slice = view.size() / T;
    Tensor out = view;
    for (size_t t = 0; t < T; ++t) {
        const size_t src = (t + T - lag % T) % T;
        for (size_t j = 0; j < slice; ++j) out.data[t * slice + j] = view.data[src * slice + j];
    }
    return out;
}

// ---------------------------------------------------------------------------
// persistence
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

struct CsvReader {
    std::ifstream in;
    std::string name;
    size_t line_no = 0;

    CsvReader(const fs::path& path, const std::string& header) : in(path), name(path.filename().string()) {
        if (!in) throw ParseError(name + ": cannot open file");
        std::string first;
        if (!std::getline(in, first)) throw ParseError(name + ": empty file");
        line_no = 1;
        if (first != header) {
            throw ParseError(name + " line 1: expected header '" + header + "', got '" + first + "'");
        }
    }

    bool next(std::vector<std::string>& fields, size_t expect) {
        std::string line;
        if (!std::getline(in, line)) return false;
        ++line_no;
        if (line.empty()) throw ParseError(name + " line " + std::to_string(line_no) + ": empty row");
        fields = split_csv_line(line);
        if (fields.size() != expect) {
            throw ParseError(name + " line " + std::to_string(line_no) + ": expected " +
                             std::to_string(expect) + " fields, got " + std::to_string(fields.size()));
        }
        return true;
    }

    size_t to_index(const std::string& f) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(f.c_str(), &end, 10);
        if (end == f.c_str() || *end != '\0') {
            throw ParseError(name + " line " + std::to_string(line_no) + ": '" + f +
                             "' is not an integer");
        }
        return static_cast<size_t>(v);
    }

    double to_double(const std::string& f) {
        char* end = nullptr;
        const double v = std::strtod(f.c_str(), &end);
        if (end == f.c_str() || *end != '\0') {
            throw ParseError(name + " line " + std::to_string(line_no) + ": '" + f +
                             "' is not a number");
        }
        return v;
    }
};

}  // namespace

void save_dataset(const TrafficDataset& ds, const std::string& dir) {
    if (ds.tau_o != 1) {
        throw ConfigError("save_dataset supports tau_o = 1 only (labels.csv has no horizon column)");
    }
    fs::create_directories(dir);

    nlohmann::json meta;
    meta["intersections"] = ds.network.intersections;
    meta["roads"] = nlohmann::json::array();
    for (const auto& [u, v] : ds.network.roads) meta["roads"].push_back({u, v});
    meta["segments"] = nlohmann::json::array();
    for (const auto& seg : ds.network.segments) meta["segments"].push_back(seg.road_indices);
    meta["T"] = ds.T;
    meta["delta_t"] = ds.delta_t;
    meta["tau_i"] = ds.tau_i;
    meta["tau_o"] = ds.tau_o;
    meta["s"] = ds.s;
    meta["seed"] = ds.seed;
    meta["providers"] = ds.providers;
    meta["noise"] = nlohmann::json::array();
    for (const auto& row : ds.view_noise) {
        nlohmann::json jrow = nlohmann::json::array();
        for (const auto& p : row) jrow.push_back({{"mu", p.mu}, {"sigma", p.sigma}, {"seed", p.seed}});
        meta["noise"].push_back(std::move(jrow));
    }
    {
        std::ofstream out(fs::path(dir) / "meta.json");
        if (!out) throw ConfigError("cannot write " + dir + "/meta.json");
        out << meta.dump(2) << "\n";
    }

    {
        std::ofstream out(fs::path(dir) / "labels.csv");
        out << "t,road,state,value\n";
        for (size_t t = 0; t < ds.T; ++t) {
            for (size_t e = 0; e < ds.network.road_count(); ++e) {
                for (size_t st = 0; st < ds.s; ++st) {
                    out << t << ',' << e << ',' << st << ',' << format9(ds.labels.at4(t, 0, e, st))
                        << '\n';
                }
            }
        }
    }

    for (size_t k = 0; k < ds.segment_count(); ++k) {
        const Segment& seg = ds.network.segments[k];
        for (size_t n = 0; n < ds.providers; ++n) {
            std::ofstream out(fs::path(dir) /
                              ("segment_" + std::to_string(k) + "_provider_" + std::to_string(n) + ".csv"));
            out << "t,lag,road,state,value\n";
            const Tensor& v = ds.views[k][n];
            for (size_t t = 0; t < ds.T; ++t) {
                for (size_t lag = 0; lag < ds.tau_i; ++lag) {
                    for (size_t i = 0; i < seg.size(); ++i) {
                        for (size_t st = 0; st < ds.s; ++st) {
                            out << t << ',' << lag << ',' << seg.road_indices[i] << ',' << st << ','
                                << format9(v.at4(t, lag, i, st)) << '\n';
                        }
                    }
                }
            }
        }
    }
}

TrafficDataset load_dataset(const std::string& dir) {
    const fs::path meta_path = fs::path(dir) / "meta.json";
    std::ifstream meta_in(meta_path);
    if (!meta_in) throw ConfigError("cannot open " + meta_path.string());
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("meta.json: " + std::string(e.what()));
    }

    TrafficDataset ds;
    try {
        ds.network.intersections = meta.at("intersections").get<size_t>();
        for (const auto& r : meta.at("roads")) {
            ds.network.roads.emplace_back(r.at(0).get<size_t>(), r.at(1).get<size_t>());
        }
        size_t k = 0;
        for (const auto& segj : meta.at("segments")) {
            Segment seg;
            seg.id = k++;
            seg.road_indices = segj.get<std::vector<size_t>>();
            ds.network.segments.push_back(std::move(seg));
        }
        ds.T = meta.at("T").get<size_t>();
        ds.delta_t = meta.at("delta_t").get<double>();
        ds.tau_i = meta.at("tau_i").get<size_t>();
        ds.tau_o = meta.at("tau_o").get<size_t>();
        ds.s = meta.at("s").get<size_t>();
        ds.seed = meta.at("seed").get<uint64_t>();
        ds.providers = meta.at("providers").get<size_t>();
        if (meta.contains("noise")) {
            for (const auto& jrow : meta.at("noise")) {
                std::vector<NoiseProfile> row;
                for (const auto& jp : jrow) {
                    row.push_back(NoiseProfile{jp.at("mu").get<double>(), jp.at("sigma").get<double>(),
                                               jp.at("seed").get<uint64_t>()});
                }
                ds.view_noise.push_back(std::move(row));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("meta.json: " + std::string(e.what()));
    }
    ds.network.validate();
    if (ds.tau_o != 1) throw ConfigError("meta.json declares tau_o != 1, unsupported on disk");

    const size_t E = ds.network.road_count();
    ds.labels = Tensor({ds.T, ds.tau_o, E, ds.s});
    {
        CsvReader r(fs::path(dir) / "labels.csv", "t,road,state,value");
        std::vector<std::string> f;
        size_t rows = 0;
        std::vector<char> seen(ds.T * E * ds.s, 0);
        while (r.next(f, 4)) {
            const size_t t = r.to_index(f[0]);
            const size_t e = r.to_index(f[1]);
            const size_t st = r.to_index(f[2]);
            if (t >= ds.T || e >= E || st >= ds.s) {
                throw ConfigError("labels.csv line " + std::to_string(r.line_no) +
                                  ": index out of range for declared dims");
            }
            ds.labels.at4(t, 0, e, st) = r.to_double(f[3]);
            seen[(t * E + e) * ds.s + st] = 1;
            ++rows;
        }
        if (rows != ds.T * E * ds.s) {
            throw ConfigError("labels.csv: declared T=" + std::to_string(ds.T) + " implies " +
                              std::to_string(ds.T * E * ds.s) + " rows, found " + std::to_string(rows));
        }
        for (char c : seen) {
            if (!c) throw ConfigError("labels.csv: duplicate rows mask a missing (t,road,state) cell");
        }
    }

    ds.views.resize(ds.segment_count());
    for (size_t k = 0; k < ds.segment_count(); ++k) {
        const Segment& seg = ds.network.segments[k];
        ds.views[k].assign(ds.providers, Tensor({ds.T, ds.tau_i, seg.size(), ds.s}));
        for (size_t n = 0; n < ds.providers; ++n) {
            const std::string fname = "segment_" + std::to_string(k) + "_provider_" +
                                      std::to_string(n) + ".csv";
            CsvReader r(fs::path(dir) / fname, "t,lag,road,state,value");
            std::vector<std::string> f;
            size_t rows = 0;
            while (r.next(f, 5)) {
                const size_t t = r.to_index(f[0]);
                const size_t lag = r.to_index(f[1]);
                const size_t road = r.to_index(f[2]);
                const size_t st = r.to_index(f[3]);
                const auto it = std::find(seg.road_indices.begin(), seg.road_indices.end(), road);
                if (t >= ds.T || lag >= ds.tau_i || st >= ds.s || it == seg.road_indices.end()) {
                    throw ConfigError(fname + " line " + std::to_string(r.line_no) +
                                      ": index out of range for declared dims");
                }
                const size_t i = static_cast<size_t>(it - seg.road_indices.begin());
                ds.views[k][n].at4(t, lag, i, st) = r.to_double(f[4]);
                ++rows;
            }
            const size_t expect = ds.T * ds.tau_i * seg.size() * ds.s;
            if (rows != expect) {
                throw ConfigError(fname + ": declared dims imply " + std::to_string(expect) +
                                  " rows, found " + std::to_string(rows));
            }
        }
    }
    if (ds.view_noise.empty()) {
        ds.view_noise.assign(ds.segment_count(), std::vector<NoiseProfile>(ds.providers));
    }
    return ds;
}

nn::Matrix flatten_series(const Tensor& t) {
    const size_t T = t.shape[0];
    const size_t width = t.size() / T;
    nn::Matrix m(T, width);
    m.data = t.data;
    return m;
}

}  // namespace tse
