// Cost and utility arithmetic for the MP/MA settlement economics.
#pragma once

#include <string>

#include "tse/common.hpp"

namespace tse::econ {

struct CommParams {
    double bandwidth_hz = 10e6;       // B
    double tx_power_w = 0.1;          // p
    double distance_m = 300.0;        // d
    double noise_dbm_per_hz = -174.0; // N0 density
    double data_bytes = 80.0;         // D
    double collect_interval_s = 0.4;  // dt, vehicle collection interval
    double sample_interval_s = 10.0;  // dT, TSE sampling interval
    bool pathloss_distance_in_m = false;  // path-loss log10 argument unit (default km)
    bool data_size_is_bits = false;       // D already in bits (default bytes, x8 in Eq. 5)
};

struct ComputeParams {
    double eta = 1e-26;           // effective capacitance
    double cycles_per_byte = 1.5e4;
    double cpu_hz = 1e9;
    double run_energy_j = 7.2e-4; // E_r, fixed sub-model run energy
};

struct EconParams {
    double tau_e = 2.44e-4;   // energy -> currency
    double tse_inputs = 8640; // inputs per settlement cycle
    double tau_a = 1000.0;    // performance -> currency
    double mae_threshold = 25.0;  // usability threshold
    double reward = 150.0;        // W
    double inspection_cost = 300.0;  // S
    double provider_count = 5.0;     // K
};

struct PayoffCell {
    double u_ma = 0.0;
    double u_mp = 0.0;
};

// Shannon uplink rate with 128.1 + 37.5 log10(d) path loss, bits/s.
double uplink_rate(const CommParams& comm, double distance_m);

// Energy per TSE input: collection (uplink) and processing.
double collection_cost(const CommParams& comm);
double processing_cost(const CommParams& comm, const ComputeParams& compute);

struct MpCosts {
    double collect_j = 0.0;  // E_t
    double process_j = 0.0;  // E_p
    double run_j = 0.0;      // E_r
};

MpCosts mp_costs(const CommParams& comm, const ComputeParams& compute);

// Currency cost of a settlement cycle: H = tau_e * T * (E_t + E_p + E_r),
// H' = tau_e * T * E_r (the lazy MP skips collection and processing).
double honest_cycle_cost(const EconParams& econ, const MpCosts& costs);
double lazy_cycle_cost(const EconParams& econ, const MpCosts& costs);

enum class MpVariant { honest, caught, uncaught_lazy, caught_repeat };
enum class MaVariant { trust_honest, inspect_caught, uncaught_lazy, inspect_honest, inspect_caught_repeat };

MpVariant mp_variant_from_name(const std::string& name);
MaVariant ma_variant_from_name(const std::string& name);

double mp_utility(MpVariant variant, const EconParams& econ, const MpCosts& costs, double rho,
                  double beta);

// Model-performance profit term: (1/K) * tau_a * [x < x_tilde] * (x_tilde - x).
double performance_profit(const EconParams& econ, double mae_x);

double ma_utility(MaVariant variant, const EconParams& econ, double mae_x, double rho,
                  double beta);

}  // namespace tse::econ
