#include "kgt/eval.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "kgt/text_util.hpp"

namespace kgt {

using nlohmann::json;

RougeScore rouge_l(const std::string& candidate, const std::string& reference) {
    auto cand = tokenize_alnum(candidate);
    auto ref = tokenize_alnum(reference);
    if (cand.empty() || ref.empty()) return {};

    // Bottom-up LCS over words.
    const std::size_t m = cand.size(), n = ref.size();
    std::vector<std::vector<std::size_t>> table(m + 1, std::vector<std::size_t>(n + 1, 0));
    for (std::size_t i = 1; i <= m; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            if (cand[i - 1] == ref[j - 1]) {
                table[i][j] = table[i - 1][j - 1] + 1;
            } else {
                table[i][j] = std::max(table[i - 1][j], table[i][j - 1]);
            }
        }
    }
    double lcs = static_cast<double>(table[m][n]);

    RougeScore score;
    score.precision = lcs / static_cast<double>(m);
    score.recall = lcs / static_cast<double>(n);
    score.f1 = (score.precision + score.recall) > 0.0
                   ? 2.0 * score.precision * score.recall / (score.precision + score.recall)
                   : 0.0;
    return score;
}

double inference_cost(std::int64_t input_tokens, std::int64_t output_tokens,
                      const PricingTable& pricing) {
    if (input_tokens < 0 || output_tokens < 0) {
        throw std::invalid_argument("token counts must be non-negative");
    }
    return (pricing.input_rate * static_cast<double>(input_tokens) +
            pricing.output_rate * static_cast<double>(output_tokens)) /
           1'000'000.0;
}

json QuestionRecord::to_json() const {
    json doc = {{"id", id},
                {"question", question},
                {"reference", reference},
                {"answer", answer},
                {"rouge_l",
                 {{"precision", rouge.precision}, {"recall", rouge.recall}, {"f1", rouge.f1}}},
                {"cost", cost},
                {"wall_time_ms", wall_time_ms},
                {"error_class", error_class},
                {"token_usage", {{"input", usage.input}, {"output", usage.output}}},
                {"run", run.to_json()}};
    if (judge_score.has_value()) doc["judge_score"] = *judge_score;
    return doc;
}

double EvalSummary::mean_rouge_f1() const {
    double sum = 0.0;
    for (const auto& r : records) sum += r.rouge.f1;
    return sum / static_cast<double>(records.size());
}

double EvalSummary::mean_cost() const {
    double sum = 0.0;
    for (const auto& r : records) sum += r.cost;
    return sum / static_cast<double>(records.size());
}

double EvalSummary::mean_wall_time_ms() const {
    double sum = 0.0;
    for (const auto& r : records) sum += r.wall_time_ms;
    return sum / static_cast<double>(records.size());
}

std::map<std::string, double> EvalSummary::error_probabilities() const {
    std::map<std::string, double> counts;
    for (const auto& r : records) {
        if (r.error_class != "none") counts[r.error_class] += 1.0;
    }
    for (auto& [cls, count] : counts) count /= static_cast<double>(records.size());
    return counts;
}

double EvalSummary::approx_reasoning_error_probability(double floor) const {
    if (records.empty()) return 0.0;
    double count = 0.0;
    for (const auto& r : records) {
        if (r.error_class == "none" && r.rouge.f1 < floor) count += 1.0;
    }
    return count / static_cast<double>(records.size());
}

std::optional<double> EvalSummary::mean_judge_score() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : records) {
        if (r.judge_score.has_value()) {
            sum += *r.judge_score;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

json EvalSummary::to_json(double reasoning_floor) const {
    json doc;
    doc["count"] = records.size();
    if (!defined()) {
        doc["aggregates_defined"] = false;
        doc["mean_rouge_l_f1"] = nullptr;
        doc["mean_cost"] = nullptr;
        doc["mean_wall_time_ms"] = nullptr;
        doc["error_probabilities"] = json::object();
        doc["approx_reasoning_error_probability"] = nullptr;
        return doc;
    }
    doc["aggregates_defined"] = true;
    doc["mean_rouge_l_f1"] = mean_rouge_f1();
    doc["mean_cost"] = mean_cost();
    doc["mean_wall_time_ms"] = mean_wall_time_ms();
    doc["error_probabilities"] = error_probabilities();
    // Approximate by construction: completed runs scoring under the floor.
    doc["approx_reasoning_error_probability"] = approx_reasoning_error_probability(reasoning_floor);
    doc["approx_reasoning_floor"] = reasoning_floor;
    if (auto judged = mean_judge_score()) doc["mean_judge_score"] = *judged;
    return doc;
}

RatioMetrics ratio_metrics(const EvalSummary& baseline, const EvalSummary& ours) {
    std::set<std::string> baseline_ids, our_ids;
    for (const auto& r : baseline.records) baseline_ids.insert(r.id);
    for (const auto& r : ours.records) our_ids.insert(r.id);
    if (baseline_ids != our_ids) {
        throw std::invalid_argument("ratio_metrics requires both summaries to cover the same questions");
    }
    if (!ours.defined() || ours.mean_cost() == 0.0 || ours.mean_wall_time_ms() == 0.0) {
        throw std::invalid_argument("ratio_metrics requires nonzero mean cost and time for 'ours'");
    }
    return {baseline.mean_cost() / ours.mean_cost(),
            baseline.mean_wall_time_ms() / ours.mean_wall_time_ms()};
}

std::vector<Question> parse_questions_jsonl(const std::string& text) {
    std::vector<Question> questions;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("questions line " + std::to_string(line_no) + ": " + e.what());
        }
        Question q;
        q.id = doc.at("id").get<std::string>();
        q.question = doc.at("question").get<std::string>();
        q.answer = doc.at("answer").get<std::string>();
        questions.push_back(std::move(q));
    }
    return questions;
}

std::vector<Question> load_questions_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open questions file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_questions_jsonl(buf.str());
}

ChatJudge::ChatJudge(std::shared_ptr<ChatProvider> chat, std::string prompt_template)
    : chat_(std::move(chat)), template_(std::move(prompt_template)) {}

double ChatJudge::judge(const std::string& question, const std::string& reference,
                        const std::string& answer) {
    std::string prompt = template_;
    auto replace_all = [&prompt](const std::string& key, const std::string& value) {
        for (auto at = prompt.find(key); at != std::string::npos; at = prompt.find(key)) {
            prompt.replace(at, key.size(), value);
        }
    };
    replace_all("{question}", question);
    replace_all("{reference}", reference);
    replace_all("{answer}", answer);

    Completion reply = chat_->complete(prompt);
    std::istringstream in(reply.text);
    double score = 0.0;
    if (!(in >> score)) {
        throw ProviderError("judge reply did not start with a numeric score: " +
                            reply.text.substr(0, 80));
    }
    return score;
}

EvalSummary run_batch(const KnowledgeGraph& graph, PlanProvider& planner, ChatProvider& answerer,
                      const EmbeddingProvider& embedder, const std::vector<Question>& questions,
                      const BatchConfig& config) {
    EvalSummary summary;
    summary.records.resize(questions.size());

    auto process = [&](std::size_t i) {
        const Question& q = questions[i];
        QuestionRecord record;
        record.id = q.id;
        record.question = q.question;
        record.reference = q.answer;
        try {
            record.run = run_query(graph, planner, answerer, embedder, q.question, config.settings,
                                   config.few_shot);
        } catch (const std::exception& e) {
            // run_query classifies expected failures itself; anything else
            // still must not abort the batch.
            record.run.query = q.question;
            record.run.error_class = "execution-break";
            record.run.error_detail = e.what();
        }
        record.answer = record.run.answer;
        record.error_class = record.run.error_class;
        record.usage = record.run.total_usage;
        record.wall_time_ms = record.run.wall_time_ms;
        record.cost = inference_cost(record.usage.input, record.usage.output, config.pricing);
        record.rouge = rouge_l(record.answer, record.reference);
        if (config.judge && !record.answer.empty()) {
            try {
                record.judge_score = config.judge->judge(q.question, q.answer, record.answer);
            } catch (const std::exception&) {
                record.judge_score.reset();  // judging is optional; never fail the batch
            }
        }
        summary.records[i] = std::move(record);
    };

    std::size_t workers = static_cast<std::size_t>(std::max(1, config.parallelism));
    if (workers == 1 || questions.size() <= 1) {
        for (std::size_t i = 0; i < questions.size(); ++i) process(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        std::size_t count = std::min(workers, questions.size());
        for (std::size_t w = 0; w < count; ++w) {
            pool.emplace_back([&]() {
                for (std::size_t i = next.fetch_add(1); i < questions.size(); i = next.fetch_add(1)) {
                    process(i);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    // Result writing is serialized after the workers finish, in question order.
    if (!config.results_path.empty()) {
        std::ofstream out(config.results_path);
        if (!out) throw std::runtime_error("cannot write results file '" + config.results_path + "'");
        for (const auto& record : summary.records) out << record.to_json().dump() << "\n";
    }
    if (!config.summary_path.empty()) {
        std::ofstream out(config.summary_path);
        if (!out) throw std::runtime_error("cannot write summary file '" + config.summary_path + "'");
        out << summary.to_json(config.reasoning_floor).dump(2) << "\n";
    }
    return summary;
}

}  // namespace kgt
