#pragma once

#include <string>

#include "vmr/backends.hpp"
#include "vmr/types.hpp"

namespace vmr {

// Builds the query-rewriting prompt. The rewrite count is spelled out
// in words ("three" for the default n_d = 3).
ChatRequest build_debias_prompt(const std::string& raw_query, int n_d,
                                double temperature, const std::string& model_name = {});

// Extracts up to n_d rewrites from a model reply: split on lines, strip
// list markers and surrounding quotes, drop empties and duplicates.
// Total function; an unusable reply falls back to the raw query.
DebiasedQuerySet parse_debias_response(const std::string& text, int n_d,
                                       const std::string& qid,
                                       const std::string& raw_query);

// Full stage: prompt, chat call, parse.
DebiasedQuerySet debias_query(const QueryRecord& query, ChatBackend& backend, int n_d,
                              double temperature, const std::string& model_name = {});

}  // namespace vmr
