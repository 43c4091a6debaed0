#include "poregrad/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>

#include "poregrad/parallel.hpp"

namespace poregrad {

void segment_stream(ModelKind model, const LocalThresholdParams& local, const AttAdjustParams& attadj,
                    const std::vector<const ParticleCutout*>& batch, const ResultSink& sink, int jobs)
{
    parallel_for(batch.size(), jobs, [&](std::size_t i) {
        auto result = model == ModelKind::local_threshold ? local_threshold(*batch[i], local)
                                                          : att_adjusted_threshold(*batch[i], attadj);
        sink(i, std::move(result));
    });
}

std::vector<SegmentationResult> segment_batch(ModelKind model, const LocalThresholdParams& local,
                                              const AttAdjustParams& attadj,
                                              const std::vector<const ParticleCutout*>& batch, int jobs)
{
    std::vector<SegmentationResult> results(batch.size());
    segment_stream(model, local, attadj, batch,
                   [&](std::size_t i, SegmentationResult&& r) { results[i] = std::move(r); }, jobs);
    return results;
}

std::vector<BenchRow> bench(ModelKind model, const LocalThresholdParams& local, const AttAdjustParams& attadj,
                            const std::vector<ParticleCutout>& cutouts, const std::vector<int>& batch_sizes,
                            const BenchOptions& options)
{
    if (cutouts.empty())
        throw ParameterError("bench: no cutouts given");
    if (options.repetitions < 1)
        throw ParameterError("bench: repetitions must be >= 1");
    int pool_size = 1;
    for (int n : batch_sizes) {
        if (n < 1)
            throw ParameterError("bench: batch sizes must be >= 1");
        pool_size = std::max(pool_size, n);
    }
    // Every batch size processes the same pool (cycled cutouts), split into
    // consecutive runs of n; only the per-run overhead differs between sizes.
    std::vector<const ParticleCutout*> pool;
    for (int i = 0; i < pool_size; ++i)
        pool.push_back(&cutouts[static_cast<std::size_t>(i) % cutouts.size()]);

    // results are consumed as they are produced, as an output writer would
    std::atomic<long> regions{0};
    const ResultSink sink = [&](std::size_t, SegmentationResult&& r) {
        regions += static_cast<long>(r.pore_regions.size());
    };
    segment_stream(model, local, attadj, {pool.front()}, sink, options.jobs);

    // Sizes are interleaved within each repetition so that drifting machine
    // load affects all of them alike.
    std::vector<std::vector<double>> times(batch_sizes.size());
    for (int rep = 0; rep < options.repetitions; ++rep) {
        for (std::size_t k = 0; k < batch_sizes.size(); ++k) {
            const auto n = static_cast<std::size_t>(batch_sizes[k]);
            double total = 0;
            for (std::size_t begin = 0; begin < pool.size(); begin += n) {
                const auto end = std::min(pool.size(), begin + n);
                const std::vector<const ParticleCutout*> batch(pool.begin() + static_cast<std::ptrdiff_t>(begin),
                                                               pool.begin() + static_cast<std::ptrdiff_t>(end));
                const auto start = std::chrono::steady_clock::now();
                segment_stream(model, local, attadj, batch, sink, options.jobs);
                total += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            }
            // mean wall time of one run, scaled to a full batch of n
            times[k].push_back(total / static_cast<double>(pool.size()) * static_cast<double>(n));
        }
    }
    std::vector<BenchRow> rows;
    for (std::size_t k = 0; k < batch_sizes.size(); ++k) {
        auto& t = times[k];
        std::sort(t.begin(), t.end());
        const double median = t.size() % 2 ? t[t.size() / 2] : 0.5 * (t[t.size() / 2 - 1] + t[t.size() / 2]);
        rows.push_back({batch_sizes[k], median, median / batch_sizes[k]});
    }
    return rows;
}

}  // namespace poregrad
