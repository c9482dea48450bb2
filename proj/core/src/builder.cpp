#include "nnm/builder.hpp"

#include <deque>
#include <unordered_set>

namespace nnm {

namespace {

void emit(const BuildConfig& config, const std::string& line) {
    if (config.log) config.log(line);
}

bool all_space(std::string_view s) {
    return display_name(s).empty();
}

} // namespace

BuildResult build_map(const BuildConfig& config, GenerationBackend& backend, ResponseValidator& validator) {
    if (config.max_queries < 1) throw InvalidArgument("max_queries must be at least 1");

    MapGraph graph;
    BuildReport report;
    std::deque<std::string> queue;
    std::unordered_set<std::string> queued;
    std::unordered_set<std::string> queried;

    for (const std::string& seed : config.initial_seeds) {
        std::string shown = display_name(seed);
        if (shown.empty()) continue;
        if (!queued.insert(name_key(shown)).second) continue;
        graph.add_node(shown);
        queue.push_back(std::move(shown));
    }
    if (queue.empty()) throw InvalidArgument("at least one non-empty initial seed is required");

    while (report.queries < config.max_queries && !queue.empty()) {
        std::string seed = std::move(queue.front());
        queue.pop_front();
        std::string key = name_key(seed);
        queued.erase(key);
        queried.insert(key);
        report.queried.push_back(seed);

        NodeId current = graph.add_node(seed);
        graph.bump_query_count(current);

        std::string prompt = config.prompt_template.render(seed);
        GenerationOutcome outcome;
        try {
            outcome = generate_with_retry(backend, prompt, config.retry);
        } catch (const BackendError& e) {
            report.generation_attempts += std::max(config.retry.attempts, 1);
            for (const std::string& s : queue) report.pending.push_back(s);
            throw PartialBuildError(e.what(), std::move(graph), std::move(report));
        }
        report.generation_attempts += outcome.attempts;
        if (outcome.attempts > 1)
            emit(config, "query '" + seed + "' succeeded after " + std::to_string(outcome.attempts) + " attempts");
        ++report.queries;

        if (!all_space(outcome.text)) {
            graph.add_topic(current, TopicText{outcome.text, TopicSource::generated, prompt, config.clock()});
        }

        std::vector<std::string> items = parse_response(outcome.text);
        report.items_parsed += items.size();
        for (const std::string& item : items) {
            bool valid = false;
            try {
                valid = validator.is_valid(item);
            } catch (const ValidatorError& e) {
                ++report.validator_errors;
                emit(config, "skipping '" + item + "': " + e.what());
                continue;
            }
            if (!valid) {
                ++report.items_rejected;
                continue;
            }
            ++report.items_accepted;

            if (auto existing = graph.find_by_name(item)) {
                graph.bump_query_count(*existing);
                if (*existing != current) graph.connect(*existing, current);
                continue;
            }
            // Every node is either queued or queried, so an unknown name is new.
            NodeId fresh = graph.add_node(item);
            graph.bump_query_count(fresh);
            graph.connect(fresh, current);
            queued.insert(name_key(item));
            queue.push_back(graph.node(fresh).name);
        }
    }

    for (const std::string& s : queue) report.pending.push_back(s);
    return {std::move(graph), std::move(report)};
}

} // namespace nnm
