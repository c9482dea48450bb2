#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "nnm/backend.hpp"
#include "nnm/errors.hpp"
#include "nnm/graph.hpp"
#include "nnm/prompt.hpp"
#include "nnm/validator.hpp"

namespace nnm {

struct BuildConfig {
    PromptTemplate prompt_template;
    std::vector<std::string> initial_seeds;
    int max_queries = 1;
    RetryPolicy retry;
    /// Stamps TopicText::created_at. Fix it for reproducible documents.
    Clock clock = wall_clock_ms;
    /// Receives one line per skipped item or retried call.
    std::function<void(std::string_view)> log;
};

struct BuildReport {
    int queries = 0;             ///< seeds consumed (one generation each)
    int generation_attempts = 0; ///< including retries
    std::size_t items_parsed = 0;
    std::size_t items_accepted = 0;
    std::size_t items_rejected = 0;
    std::size_t validator_errors = 0;
    std::vector<std::string> queried; ///< seeds in consumption order
    std::vector<std::string> pending; ///< seeds still queued at the end

    bool operator==(const BuildReport&) const = default;
};

struct BuildResult {
    MapGraph graph;
    BuildReport report;
};

/// The backend gave up mid-build; carries everything gathered so far.
class PartialBuildError : public BackendError {
public:
    PartialBuildError(const std::string& what, MapGraph graph, BuildReport report)
        : BackendError(what), graph_(std::move(graph)), report_(std::move(report)) {}

    const MapGraph& graph() const { return graph_; }
    const BuildReport& report() const { return report_; }

private:
    MapGraph graph_;
    BuildReport report_;
};

/// Grows a map by repeatedly prompting the backend.
///
/// Seeds are consumed breadth-first from a FIFO queue. Each consumed seed is
/// rendered into the template, sent to the backend, and its completion is
/// stored as a generated TopicText on the seed's node. Every valid item in
/// the parsed completion is connected to the seed's node: existing nodes are
/// reused, unknown names become new nodes and join the queue. No seed is
/// consumed twice and at most max_queries completions are requested.
///
/// query_count grows by one when a node's name is consumed as a seed and by
/// one each time it appears as a valid item. Positions are left at the origin.
///
/// Throws InvalidArgument for max_queries < 1 or no usable seed, and
/// PartialBuildError when the backend fails after all retries.
BuildResult build_map(const BuildConfig& config, GenerationBackend& backend, ResponseValidator& validator);

} // namespace nnm
