#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "expem/rng.hpp"

namespace expem {

// Uniform grid over [0, T]. Dyadic grids (steps = 2^q) are the working
// resolution for convergence studies; arbitrary step counts are allowed
// for long stability runs. dt is stored as T/steps and nodes are computed
// by multiplication, never by accumulation, so node(steps) == T exactly.
struct TimeGrid {
    double horizon = 1.0;
    int level = 0;            // q for dyadic grids, -1 otherwise
    std::size_t steps = 1;
    double dt = 1.0;

    double node(std::size_t n) const {
        return n == steps ? horizon : static_cast<double>(n) * dt;
    }
    // eta(t) = dt*floor(t/dt), the last grid node at or before t.
    double eta(double t) const;
    double delta(double t) const { return t - eta(t); }

    bool operator==(const TimeGrid&) const = default;
};

TimeGrid make_grid(double T, int q);
TimeGrid make_grid_steps(double T, std::size_t n_steps);

struct BrownianPath {
    TimeGrid grid;
    StreamId stream;
    std::vector<double> increments; // increments[n] = W_{t_{n+1}} - W_{t_n} ~ N(0, dt)

    double terminal() const; // W_T, pairwise-tree sum of the increments
};

// Deterministic: identical (grid, stream) inputs give bit-identical paths
// on any platform, thread and call order.
BrownianPath sample_brownian(const TimeGrid& grid, const StreamId& stream);

// Allocation-free variant for hot loops; out.size() must equal grid.steps.
void sample_brownian_into(const TimeGrid& grid, const StreamId& stream, std::span<double> out);

// Sum adjacent increments `levels` times. Each application halves the
// resolution; the result is the Brownian path seen on the coarser grid.
BrownianPath coarsen(const BrownianPath& path, int levels);

// Same pair-summing into a caller-owned buffer (bit-identical to coarsen).
void coarsen_into(std::span<const double> fine, int levels, std::vector<double>& out);

// Recursive halving sum. Used as the canonical reduction everywhere: it
// makes coarsening commute bit-exactly with totals, and it makes Monte
// Carlo aggregates independent of the thread count.
double pairwise_sum(std::span<const double> values);

// Debug dump of the increments (native little-endian 64-bit floats after a
// small header carrying T, q and the stream id).
void write_increments(const BrownianPath& path, const std::string& filename);
BrownianPath read_increments(const std::string& filename);

} // namespace expem
