#include "vmr/debias.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace vmr {

namespace {

const char* kCountWords[] = {
    "zero",     "one",     "two",       "three",    "four",    "five",    "six",
    "seven",    "eight",   "nine",      "ten",      "eleven",  "twelve",  "thirteen",
    "fourteen", "fifteen", "sixteen",   "seventeen", "eighteen", "nineteen", "twenty"};

std::string count_in_words(int n) {
    if (n >= 0 && n <= 20) return kCountWords[n];
    return std::to_string(n);
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Strips a leading list marker: "1.", "2)", "-", "*", "•".
std::string strip_marker(std::string line) {
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) {
        return trim(line.substr(i + 1));
    }
    if (!line.empty() && (line[0] == '-' || line[0] == '*')) {
        return trim(line.substr(1));
    }
    // UTF-8 bullet
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xe2 &&
        static_cast<unsigned char>(line[1]) == 0x80 &&
        static_cast<unsigned char>(line[2]) == 0xa2) {
        return trim(line.substr(3));
    }
    return line;
}

std::string strip_quotes(std::string s) {
    if (s.size() >= 2) {
        char a = s.front(), b = s.back();
        if ((a == '"' && b == '"') || (a == '\'' && b == '\'')) {
            return trim(s.substr(1, s.size() - 2));
        }
    }
    return s;
}

}  // namespace

ChatRequest build_debias_prompt(const std::string& raw_query, int n_d,
                                double temperature, const std::string& model_name) {
    if (raw_query.empty()) throw ValidationError("build_debias_prompt: empty query");
    if (n_d < 1) throw ValidationError("build_debias_prompt: n_d must be >= 1");

    std::ostringstream prompt;
    prompt << "Raw sentence: '" << raw_query << "'\n\n"
           << "Task 1: Please detect and rectify spelling and grammatical mistakes "
              "in the raw sentence.\n"
           << "Task 2: Please rewrite the rectified sentence using different wording "
              "while ensuring that the rewritten sentence retains the original "
              "meaning. Please provide "
           << count_in_words(n_d)
           << " different rewrites. Please avoid rare words and phrases.\n\n"
           << "Please only return the rewritten sentences.";

    ChatRequest request;
    request.temperature = temperature;
    request.model_name = model_name;
    request.messages.push_back({"user", {ContentPart::make_text(prompt.str())}});
    return request;
}

DebiasedQuerySet parse_debias_response(const std::string& text, int n_d,
                                       const std::string& qid,
                                       const std::string& raw_query) {
    if (n_d < 1) throw ValidationError("parse_debias_response: n_d must be >= 1");

    std::vector<std::string> rewrites;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line) && rewrites.size() < static_cast<std::size_t>(n_d)) {
        std::string clean = strip_quotes(strip_marker(trim(line)));
        if (clean.empty()) continue;
        if (std::find(rewrites.begin(), rewrites.end(), clean) != rewrites.end()) {
            continue;
        }
        rewrites.push_back(std::move(clean));
    }

    if (rewrites.empty()) {
        return DebiasedQuerySet(qid, raw_query, {raw_query}, /*fallback_used=*/true);
    }
    return DebiasedQuerySet(qid, raw_query, std::move(rewrites), /*fallback_used=*/false);
}

DebiasedQuerySet debias_query(const QueryRecord& query, ChatBackend& backend, int n_d,
                              double temperature, const std::string& model_name) {
    auto request = build_debias_prompt(query.raw_text(), n_d, temperature, model_name);
    auto reply = backend.chat(request);
    return parse_debias_response(reply, n_d, query.qid(), query.raw_text());
}

}  // namespace vmr
