#include "aaflow/costmodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aaflow {
namespace {

void check_core(const CostParams& p) {
    if (p.n < 1 || p.b < 1 || p.p < 1) {
        throw std::invalid_argument("cost params: n, b, p must all be >= 1");
    }
    if (p.alpha < 0 || p.beta < 0 || p.ray_sigma < 0 || p.ray_delta < 0 || p.dask_gamma < 0 ||
        p.dask_eta < 0) {
        throw std::invalid_argument("cost params: costs must be >= 0");
    }
}

double batches(const CostParams& p) {
    return std::ceil(p.n / p.b);
}

double waves(const CostParams& p) {
    return std::ceil(batches(p) / p.p);
}

} // namespace

double predict_seq(const CostParams& p) {
    check_core(p);
    return batches(p) * (p.alpha + p.beta * p.b);
}

double predict_async(const CostParams& p) {
    check_core(p);
    return waves(p) * (p.alpha + p.beta * p.b);
}

double predict_async_continuous(const CostParams& p) {
    check_core(p);
    return p.n * p.alpha / (p.b * p.p) + p.n * p.beta / p.p;
}

double predict_ray(const CostParams& p) {
    check_core(p);
    return waves(p) * (p.alpha + p.ray_sigma + p.beta * p.b) + p.ray_delta;
}

double predict_ray_continuous(const CostParams& p) {
    check_core(p);
    return p.n * (p.alpha + p.ray_sigma) / (p.b * p.p) + p.n * p.beta / p.p + p.ray_delta;
}

double predict_dask(const CostParams& p) {
    check_core(p);
    return waves(p) * (p.alpha + p.beta * p.b) + p.dask_gamma + p.dask_eta;
}

double predict_dask_continuous(const CostParams& p) {
    check_core(p);
    return p.n * p.alpha / (p.b * p.p) + p.n * p.beta / p.p + p.dask_gamma + p.dask_eta;
}

double predict_bsp(const BspParams& p) {
    if (p.supersteps.empty()) {
        throw std::invalid_argument("bsp params: at least one superstep required");
    }
    if (p.workers < 1) {
        throw std::invalid_argument("bsp params: workers must be >= 1");
    }
    double total = 0;
    for (const auto& s : p.supersteps) {
        total += s.work / p.workers + p.comm_cost_per_unit * s.comm_volume + p.barrier_latency;
    }
    return total;
}

double predict_overlap(const OverlapParams& p) {
    if (p.batch_count < 1) {
        throw std::invalid_argument("overlap params: batch_count must be >= 1");
    }
    double slowest = 0;
    for (const double t : p.stage_batch_ms) {
        slowest = std::max(slowest, t);
    }
    return p.startup_ms + static_cast<double>(p.batch_count - 1) * slowest + p.drain_ms;
}

double fit_omega(double measured_ms, const CostParams& p) {
    if (measured_ms < 0) {
        throw std::invalid_argument("fit_omega: measured must be >= 0");
    }
    return measured_ms - predict_async(p);
}

} // namespace aaflow
