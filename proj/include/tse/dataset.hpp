// Vertically-split traffic datasets: synthetic generation, provider views,
// noise/lazy perturbations, and the on-disk CSV layout.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tse/common.hpp"
#include "tse/network.hpp"
#include "tse/nn.hpp"

namespace tse {

// Small dense tensor, row-major over an arbitrary shape.
struct Tensor {
    std::vector<size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<size_t> s) : shape(std::move(s)) {
        size_t n = 1;
        for (size_t d : shape) n *= d;
        data.assign(n, 0.0);
    }

    size_t size() const { return data.size(); }
    size_t dim(size_t i) const { return shape[i]; }

    // strided access for the common 4-D case
    double& at4(size_t a, size_t b, size_t c, size_t d) {
        return data[((a * shape[1] + b) * shape[2] + c) * shape[3] + d];
    }
    double at4(size_t a, size_t b, size_t c, size_t d) const {
        return data[((a * shape[1] + b) * shape[2] + c) * shape[3] + d];
    }

    bool operator==(const Tensor& other) const {
        return shape == other.shape && data == other.data;
    }
};

struct NoiseProfile {
    double mu = 0.0;
    double sigma = 0.0;
    uint64_t seed = 0;
};

struct LazyPolicy {
    enum class Mode { honest, random_data, historical_data };
    Mode mode = Mode::honest;
    double lazy_fraction = 0.0;
};

LazyPolicy::Mode lazy_mode_from_name(const std::string& name);
std::string lazy_mode_name(LazyPolicy::Mode mode);

struct DynamicsParams {
    std::vector<double> harmonic_cycles = {1.0, 3.0, 7.0};  // cycles per full span
    std::vector<double> harmonic_amps = {1.0, 0.55, 0.3};
    double noise_scale = 0.5;
    int noise_smooth_passes = 8;   // circular [1/4,1/2,1/4] smoothing of the white noise
    double spatial_mix = 0.35;
    int spatial_passes = 2;
    double state_coupling = 0.6;   // density = c*flow + (1-c)*own process
};

// Time is circular: sample t's input window is the tau_i steps before t
// (mod T) and its label the tau_o steps from t on. Labels therefore carry the
// complete per-road ground-truth series, and segment windows derive from them.
struct TrafficDataset {
    RoadNetwork network;
    size_t T = 0;
    double delta_t = 10.0;  // seconds between samples
    size_t tau_i = 9;
    size_t tau_o = 1;
    size_t s = 2;  // traffic states: 0 = flow, 1 = density
    size_t providers = 6;
    uint64_t seed = 0;

    Tensor labels;                                     // [T, tau_o, |E|, s]
    std::vector<std::vector<Tensor>> views;            // [K][N] of [T, tau_i, |K_k|, s]
    std::vector<std::vector<NoiseProfile>> view_noise; // provenance per view

    size_t segment_count() const { return network.segment_count(); }

    // Ground-truth input windows for one segment, rebuilt from the labels.
    Tensor segment_truth(const Segment& seg) const;

    bool operator==(const TrafficDataset& other) const;
};

struct GenerateOptions {
    size_t tau_i = 9;
    size_t tau_o = 1;
    double delta_t = 10.0;
    size_t providers = 6;
    DynamicsParams dynamics;
};

// Seeded, reproducible synthetic traffic states; per-road series are smooth,
// spatially correlated, temporally autocorrelated, z-scored per road, and
// rounded to 9 significant digits so the CSV round trip is exact.
TrafficDataset generate_synthetic(const RoadNetwork& network, size_t T, uint64_t seed,
                                  const GenerateOptions& opts = {});

// Ground truth plus elementwise Gaussian(mu, sigma^2); standard normals are
// drawn for every element regardless of sigma, so one seed yields a shared
// noise field across (mu, sigma) settings.
Tensor derive_provider_view(const TrafficDataset& ds, const Segment& segment,
                            const NoiseProfile& noise);

// Fills views[k][n] via derive_provider_view for every cell of the profile table.
void apply_noise_profiles(TrafficDataset& ds,
                          const std::vector<std::vector<NoiseProfile>>& profiles);

// Replaces ceil(lazy_fraction * T) seeded-uniformly-chosen time slices by
// uniform draws over the view's value range (random_data) or by the history
// tensor at the same indices (historical_data). honest returns the input.
Tensor apply_lazy_policy(const Tensor& view, const LazyPolicy& policy, const Tensor* history,
                         uint64_t seed);

// Same provider view shifted back by `lag` time steps (circular).
Tensor make_history(const Tensor& view, size_t lag);

// Directory layout: meta.json, labels.csv (t,road,state,value),
// segment_<k>_provider_<n>.csv (t,lag,road,state,value). Floats as %.9g.
void save_dataset(const TrafficDataset& ds, const std::string& dir);
TrafficDataset load_dataset(const std::string& dir);

// [T x (prod of the remaining dims)] view of a windowed tensor.
nn::Matrix flatten_series(const Tensor& t);

}  // namespace tse
