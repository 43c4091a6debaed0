#pragma once

#include <functional>
#include <vector>

#include "poregrad/segment.hpp"

namespace poregrad {

struct BenchRow {
    int n = 0;
    double wall_seconds = 0;     // median over repetitions
    double per_particle = 0;     // wall_seconds / n
};

struct BenchOptions {
    int repetitions = 5;
    int jobs = 1;
};

/// Times a segmentation model per batch size n. A pool of max(n) cutouts
/// (cycled when fewer are given) is processed in consecutive runs of n, so
/// every size sees the same particles; wall_seconds is the time of one run of
/// n, median over repetitions. A warm-up run is excluded.
std::vector<BenchRow> bench(ModelKind model, const LocalThresholdParams& local,
                            const AttAdjustParams& attadj, const std::vector<ParticleCutout>& cutouts,
                            const std::vector<int>& batch_sizes, const BenchOptions& options = {});

using ResultSink = std::function<void(std::size_t index, SegmentationResult&& result)>;

/// Segments a batch, handing each result to `sink` as soon as it is ready.
/// With jobs > 1 the sink is called concurrently.
void segment_stream(ModelKind model, const LocalThresholdParams& local, const AttAdjustParams& attadj,
                    const std::vector<const ParticleCutout*>& batch, const ResultSink& sink, int jobs = 1);

/// Segments a batch; results are in input order regardless of `jobs`.
std::vector<SegmentationResult> segment_batch(ModelKind model, const LocalThresholdParams& local,
                                              const AttAdjustParams& attadj,
                                              const std::vector<const ParticleCutout*>& batch, int jobs = 1);

}  // namespace poregrad
