#pragma once

#include <cstdint>
#include <vector>

namespace aaflow {

// Inputs to the analytic runtime predictors. Per-batch cost is alpha + beta*b;
// the ray_/dask_ extras are those runtimes' additional overhead terms.
struct CostParams {
    double n = 1;     // item count
    double b = 1;     // batch size
    double p = 1;     // worker count
    double alpha = 0; // fixed per-batch overhead (ms)
    double beta = 0;  // per-item cost (ms)

    double ray_sigma = 0;  // object-store / serialization overhead per batch
    double ray_delta = 0;  // result collection overhead
    double dask_gamma = 0; // graph construction / dependency management
    double dask_eta = 0;   // communication / shuffle overhead
};

struct BspSuperstep {
    double work = 0;        // total computation in the superstep
    double comm_volume = 0; // communication volume h
};

struct BspParams {
    std::vector<BspSuperstep> supersteps;
    double workers = 1;            // P
    double comm_cost_per_unit = 0; // g
    double barrier_latency = 0;    // L
};

struct OverlapParams {
    double startup_ms = 0;
    double drain_ms = 0;
    std::vector<double> stage_batch_ms; // steady-state per-batch time per stage
    std::uint64_t batch_count = 1;      // M
};

// Serial batched execution: ceil(n/b) batches, each alpha + beta*b.
// With b = 1 this reduces to n*(alpha + beta).
double predict_seq(const CostParams& p);

// Discrete wave form: ceil(ceil(n/b) / p) waves of alpha + beta*b.
double predict_async(const CostParams& p);
// Continuous form n*alpha/(b*p) + n*beta/p, used for scaling analysis.
double predict_async_continuous(const CostParams& p);

double predict_ray(const CostParams& p);
double predict_ray_continuous(const CostParams& p);

double predict_dask(const CostParams& p);
double predict_dask_continuous(const CostParams& p);

// Sum over supersteps of w_s/P + g*h_s + L.
double predict_bsp(const BspParams& p);

// startup + (M-1)*max_k(t_k) + drain.
double predict_overlap(const OverlapParams& p);

// Framework-overhead residual: measured minus the discrete async prediction.
// May be negative when the model overestimates.
double fit_omega(double measured_ms, const CostParams& p);

} // namespace aaflow
