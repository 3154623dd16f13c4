#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "ravu/errors.hpp"
#include "ravu/reasoning.hpp"
#include "ravu/text.hpp"

namespace ravu {

namespace {

enum class ArgKind { text, node_ref, time_ref_or_int };

struct ArgSpec {
    std::string_view name;
    ArgKind kind;
    bool required;
};

struct Signature {
    Function function;
    std::string_view name;
    std::vector<ArgSpec> args;
    std::optional<std::string_view> result;  // "node", "time", ...
};

const std::vector<Signature>& signatures() {
    static const std::vector<Signature> table = {
        {Function::localize_node, "localize_node", {{"query", ArgKind::text, true}}, "node"},
        {Function::sample_entity_events,
         "sample_entity_events",
         {{"node", ArgKind::node_ref, true},
          {"sample_start_time", ArgKind::time_ref_or_int, false},
          {"events_to_sample", ArgKind::text, true}},
         "frames"},
        {Function::extract_temporal_part,
         "extract_temporal_part",
         {{"target_part", ArgKind::text, true}},
         "segment"},
        {Function::count_nodes,
         "count_nodes",
         {{"node_query", ArgKind::text, true}, {"event_condition", ArgKind::text, false}},
         "count"},
        {Function::get_global_context, "get_global_context", {}, "frames"},
        {Function::analyze_events,
         "analyze_events",
         {{"query", ArgKind::text, true}, {"node", ArgKind::node_ref, true}},
         "time"},
        {Function::identify_node, "identify_node", {{"query", ArgKind::text, true}}, "node"},
    };
    return table;
}

const Signature& signature(Function f) {
    for (const auto& s : signatures()) {
        if (s.function == f) return s;
    }
    throw std::logic_error("no signature");
}

std::string_view result_kind(Function f) {
    return *signature(f).result;
}

class LineParser {
public:
    LineParser(std::string_view line, int line_no) : s_(line), line_(line_no) {}

    [[noreturn]] void fail(const std::string& reason) const {
        throw ParseError("plan", reason, line_);
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool at_end() {
        skip_ws();
        return pos_ >= s_.size() || s_[pos_] == '#';
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!consume(c)) {
            fail(std::string("expected '") + c + "'" +
                 (pos_ < s_.size() ? std::string(" near '") + s_[pos_] + "'" : " at end of line"));
        }
    }

    std::string identifier() {
        skip_ws();
        const auto start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
            ++pos_;
        }
        if (start == pos_) fail("expected an identifier");
        return std::string(s_.substr(start, pos_ - start));
    }

    ArgValue value() {
        skip_ws();
        if (pos_ >= s_.size()) fail("missing value");
        const char c = s_[pos_];
        if (c == '"') {
            ++pos_;
            std::string out;
            while (pos_ < s_.size() && s_[pos_] != '"') {
                if (s_[pos_] == '\\') {
                    if (pos_ + 1 >= s_.size()) break;
                    const char e = s_[pos_ + 1];
                    if (e != '"' && e != '\\') fail(std::string("bad escape \\") + e);
                    out.push_back(e);
                    pos_ += 2;
                    continue;
                }
                out.push_back(s_[pos_++]);
            }
            if (pos_ >= s_.size()) fail("unterminated string");
            ++pos_;
            return out;
        }
        if (c == '$') {
            ++pos_;
            return StepRef{static_cast<std::size_t>(integer("step reference"))};
        }
        if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) return integer("integer");
        fail(std::string("unexpected value starting with '") + c + "'");
    }

private:
    std::int64_t integer(const char* what) {
        const auto start = pos_;
        if (pos_ < s_.size() && s_[pos_] == '-') ++pos_;
        const auto digits = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (digits == pos_) fail(std::string("malformed ") + what);
        if (pos_ < s_.size() &&
            (std::isalpha(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
            fail(std::string("malformed ") + what);
        }
        try {
            return std::stoll(std::string(s_.substr(start, pos_ - start)));
        } catch (const std::out_of_range&) {
            fail(std::string(what) + " out of range");
        }
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    int line_;
};

std::string describe(const ArgValue& v) {
    if (std::holds_alternative<std::string>(v)) return "a string";
    if (std::holds_alternative<std::int64_t>(v)) return "an integer";
    return "$" + std::to_string(std::get<StepRef>(v).step);
}

std::string quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace

std::string_view to_string(Function f) {
    return signature(f).name;
}

std::optional<Function> function_from_string(std::string_view name) {
    if (name == "analyze_entity_events") return Function::analyze_events;
    for (const auto& s : signatures()) {
        if (s.name == name) return s.function;
    }
    return std::nullopt;
}

bool produces_frames(Function f) {
    switch (f) {
        case Function::localize_node:
        case Function::identify_node:
        case Function::sample_entity_events:
        case Function::extract_temporal_part:
        case Function::get_global_context: return true;
        case Function::count_nodes:
        case Function::analyze_events: return false;
    }
    return false;
}

std::optional<EventSelector> parse_event_selector(std::string_view text_in) {
    const auto t = text::to_lower(text::trim(text_in));
    if (t == "current") return EventSelector{EventSelector::Kind::current, 1};
    if (t == "all") return EventSelector{EventSelector::Kind::all, 0};
    for (auto [prefix, kind] : {std::pair{std::string_view("previous:"), EventSelector::Kind::previous},
                                std::pair{std::string_view("next:"), EventSelector::Kind::next}}) {
        if (!t.starts_with(prefix)) continue;
        const auto digits = t.substr(prefix.size());
        if (digits.empty() || digits.size() > 6 ||
            !std::all_of(digits.begin(), digits.end(),
                         [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
            return std::nullopt;
        }
        const auto n = std::stoul(digits);
        if (n == 0) return std::nullopt;
        return EventSelector{kind, n};
    }
    return std::nullopt;
}

ReasoningPlan parse_plan(std::string_view text_in) {
    ReasoningPlan plan;
    std::vector<std::string_view> kinds;  // result kind per parsed step
    std::istringstream in{std::string(text_in)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = text::trim(raw);
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto body = text::trim(std::string_view(line).substr(1));
            auto take = [&](std::string_view key, std::string& field) {
                if (!body.starts_with(key)) return false;
                const auto value = text::trim(std::string_view(body).substr(key.size()));
                field += (field.empty() ? "" : " ") + value;
                return true;
            };
            if (!take("question:", plan.question)) take("analysis:", plan.analysis);
            continue;
        }

        LineParser p(line, line_no);
        const auto name = p.identifier();
        const auto fn = function_from_string(name);
        if (!fn) p.fail("unknown function '" + name + "'");
        const auto& sig = signature(*fn);
        p.expect('(');
        ReasoningStep step{*fn, {}};
        if (!p.consume(')')) {
            for (;;) {
                auto arg = p.identifier();
                if (*fn == Function::count_nodes && arg == "node") arg = "node_query";
                auto spec = std::find_if(sig.args.begin(), sig.args.end(),
                                         [&](const ArgSpec& a) { return a.name == arg; });
                if (spec == sig.args.end()) {
                    p.fail("bad argument name '" + arg + "' for " + std::string(sig.name));
                }
                p.expect('=');
                auto value = p.value();
                if (step.args.contains(arg)) p.fail("duplicate argument '" + arg + "'");

                if (const auto* ref = std::get_if<StepRef>(&value)) {
                    const auto current = plan.steps.size() + 1;
                    if (ref->step == 0) p.fail("invalid step reference $0");
                    if (ref->step >= current) {
                        p.fail("forward reference $" + std::to_string(ref->step));
                    }
                    const auto kind = kinds[ref->step - 1];
                    const bool ok = (spec->kind == ArgKind::node_ref && kind == "node") ||
                                    (spec->kind == ArgKind::time_ref_or_int && kind == "time");
                    if (!ok) {
                        p.fail("type mismatch: '" + arg + "' cannot take $" +
                               std::to_string(ref->step) + " (" + std::string(kind) + ")");
                    }
                } else {
                    const bool is_text = std::holds_alternative<std::string>(value);
                    const bool ok = (spec->kind == ArgKind::text && is_text) ||
                                    (spec->kind == ArgKind::time_ref_or_int && !is_text);
                    if (!ok) {
                        p.fail("type mismatch: '" + arg + "' cannot take " + describe(value));
                    }
                }
                step.args.emplace(arg, std::move(value));
                if (p.consume(')')) break;
                if (!p.consume(',')) p.fail("expected ',' or ')' after argument '" + arg + "'");
            }
        }
        if (!p.at_end()) p.fail("unexpected text after ')'");

        for (const auto& spec : sig.args) {
            if (spec.required && !step.args.contains(std::string(spec.name))) {
                p.fail("missing argument '" + std::string(spec.name) + "' for " +
                       std::string(sig.name));
            }
        }
        if (auto it = step.args.find("events_to_sample"); it != step.args.end()) {
            if (!parse_event_selector(std::get<std::string>(it->second))) {
                p.fail("bad events_to_sample '" + std::get<std::string>(it->second) +
                       "' (expected previous:n, next:n, current or all)");
            }
        }
        if (auto it = step.args.find("target_part"); it != step.args.end()) {
            const auto part = text::to_lower(std::get<std::string>(it->second));
            if (part != "beginning" && part != "middle" && part != "end") {
                p.fail("bad target_part '" + std::get<std::string>(it->second) +
                       "' (expected beginning, middle or end)");
            }
        }
        for (const auto& key : {"query", "node_query"}) {
            if (auto it = step.args.find(key); it != step.args.end()) {
                if (text::trim(std::get<std::string>(it->second)).empty()) {
                    p.fail(std::string("empty ") + key);
                }
            }
        }
        plan.steps.push_back(std::move(step));
        kinds.push_back(result_kind(*fn));
    }
    if (plan.steps.empty()) throw ParseError("plan", "plan has no steps");
    return plan;
}

std::string render_plan(const ReasoningPlan& plan) {
    std::string out;
    if (!plan.question.empty()) out += "# question: " + plan.question + "\n";
    if (!plan.analysis.empty()) out += "# analysis: " + plan.analysis + "\n";
    for (const auto& step : plan.steps) {
        const auto& sig = signature(step.function);
        std::vector<std::string> parts;
        for (const auto& spec : sig.args) {
            auto it = step.args.find(std::string(spec.name));
            if (it == step.args.end()) continue;
            std::string v;
            if (const auto* s = std::get_if<std::string>(&it->second)) {
                v = quote(*s);
            } else if (const auto* i = std::get_if<std::int64_t>(&it->second)) {
                v = std::to_string(*i);
            } else {
                v = "$" + std::to_string(std::get<StepRef>(it->second).step);
            }
            parts.push_back(std::string(spec.name) + "=" + v);
        }
        out += std::string(sig.name) + "(" + text::join(parts, ", ") + ")\n";
    }
    return out;
}

ExampleLibrary load_example_library(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(dir)) {
        for (const auto& e : std::filesystem::directory_iterator(dir)) {
            if (e.path().extension() == ".plan") files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());
    ExampleLibrary out;
    for (const auto& f : files) {
        std::ifstream in(f);
        std::ostringstream ss;
        ss << in.rdbuf();
        ReasoningPlan plan;
        try {
            plan = parse_plan(ss.str());
        } catch (const ParseError& e) {
            throw ParseError(f.filename().string(), e.reason(), e.line());
        }
        auto body = plan;
        body.question.clear();
        body.analysis.clear();
        out.push_back({plan.question, plan.analysis, render_plan(body)});
    }
    return out;
}

BreakdownResult breakdown(std::string_view question, const ExampleLibrary& examples,
                          Backend& backend, const PromptLibrary& prompts, int max_retries) {
    if (examples.empty()) throw std::invalid_argument("breakdown needs an example library");
    const auto bundle = prompts.bundle(Role::breakdown, payload::breakdown(question, examples));
    try {
        auto plan = generate_parsed(backend, bundle, max_retries, [](const std::string& out) {
            try {
                return parse_plan(out);
            } catch (const ParseError& e) {
                throw MalformedResponse(e.what());
            }
        });
        plan.question = std::string(question);
        return {std::move(plan), false};
    } catch (const MalformedResponse&) {
        ReasoningPlan plan;
        plan.question = std::string(question);
        plan.analysis = "fallback: breakdown output did not parse";
        plan.steps.push_back({Function::get_global_context, {}});
        return {std::move(plan), true};
    }
}

bool is_global_plan(const ReasoningPlan& plan) {
    return plan.steps.size() == 1 && plan.steps.front().function == Function::get_global_context;
}

}  // namespace ravu
