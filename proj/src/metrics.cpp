#include "flowgen/metrics.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <tuple>
#include <unordered_map>

#include "flowgen/ast.h"
#include "flowgen/builtins.h"
#include "flowgen/errors.h"
#include "flowgen/parser.h"
#include "flowgen/variable_flow.h"
#include "flowgen/walk.h"

namespace flowgen {
namespace {

constexpr std::size_t kMaxOrder = 4;
constexpr double kKeywordWeight = 5.0;
constexpr int kAstDepthCap = 3;

using Counts = std::unordered_map<std::string, std::int64_t>;

std::string join_gram(const std::vector<std::string>& toks, std::size_t start,
                      std::size_t n) {
    std::string key;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) key.push_back('\x1f');
        key += toks[start + i];
    }
    return key;
}

Counts ngram_counts(const std::vector<std::string>& toks, std::size_t n) {
    Counts counts;
    if (toks.size() >= n)
        for (std::size_t i = 0; i + n <= toks.size(); ++i) ++counts[join_gram(toks, i, n)];
    return counts;
}

// Clipped matches and candidate totals for one n-gram order.  When `weighted`
// is set (unigrams of the keyword-weighted variant), every count is scaled by
// the keyword weight for Python keywords.
struct OrderTally {
    double matched = 0.0;
    double total = 0.0;
    double ref_total = 0.0;
};

OrderTally tally_order(const std::vector<std::string>& cand,
                       const std::vector<std::string>& ref, std::size_t n,
                       bool weighted) {
    Counts cand_counts = ngram_counts(cand, n);
    Counts ref_counts = ngram_counts(ref, n);
    auto weight_of = [&](const std::string& gram) {
        if (!weighted || n != 1) return 1.0;
        return is_python_keyword(gram) ? kKeywordWeight : 1.0;
    };
    OrderTally t;
    for (const auto& [gram, count] : cand_counts) {
        double w = weight_of(gram);
        t.total += w * static_cast<double>(count);
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end())
            t.matched += w * static_cast<double>(std::min(count, it->second));
    }
    for (const auto& [gram, count] : ref_counts)
        t.ref_total += weight_of(gram) * static_cast<double>(count);
    return t;
}

// Shared BLEU combination: geometric mean of the four precisions with the
// zero-precision smoothing and vacuous-order rule from the header, times the
// brevity penalty.
double combine_bleu(const std::array<OrderTally, kMaxOrder>& orders,
                    double cand_len, double ref_len) {
    if (cand_len <= 0.0) return 0.0;
    double log_sum = 0.0;
    for (const auto& t : orders) {
        double p;
        if (t.total <= 0.0)
            p = t.ref_total <= 0.0 ? 1.0 : 1.0 / (2.0 * cand_len);
        else if (t.matched <= 0.0)
            p = 1.0 / (2.0 * cand_len);
        else
            p = t.matched / t.total;
        log_sum += std::log(p);
    }
    double bp = cand_len >= ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
    return bp * std::exp(log_sum / static_cast<double>(kMaxOrder));
}

double bleu_impl(const std::vector<std::string>& cand,
                 const std::vector<std::string>& ref, bool weighted) {
    std::array<OrderTally, kMaxOrder> orders;
    for (std::size_t n = 1; n <= kMaxOrder; ++n)
        orders[n - 1] = tally_order(cand, ref, n, weighted);
    return combine_bleu(orders, static_cast<double>(cand.size()),
                        static_cast<double>(ref.size()));
}

// --- AST subtree matching ---------------------------------------------------

// Kinds whose `value` field carries an operator spelling rather than an
// identifier or literal; those stay visible in the shape signature.
bool value_is_operator(NodeKind kind) {
    switch (kind) {
        case NodeKind::BoolOp:
        case NodeKind::BinOp:
        case NodeKind::UnaryOp:
        case NodeKind::AugAssign:
        case NodeKind::Compare:
            return true;
        default:
            return false;
    }
}

void for_each_child(const AstNode& node, const auto& fn) {
    for (const auto& list :
         {&node.decorators, &node.exprs, &node.body, &node.handlers, &node.orelse,
          &node.finalbody, &node.cases})
        for (const auto& child : *list) fn(*child);
}

std::string subtree_signature(const AstNode& node, int depth) {
    std::string sig = "(";
    sig += kind_name(node.kind);
    if (value_is_operator(node.kind) && !node.value.empty()) {
        sig.push_back(':');
        sig += node.value;
    }
    if (depth < kAstDepthCap)
        for_each_child(node, [&](const AstNode& child) {
            sig += subtree_signature(child, depth + 1);
        });
    sig.push_back(')');
    return sig;
}

Counts subtree_multiset(const AstNode& root) {
    Counts counts;
    auto visit = [&](const AstNode& node, const auto& self) -> void {
        ++counts[subtree_signature(node, 0)];
        for_each_child(node, [&](const AstNode& child) { self(child, self); });
    };
    visit(root, visit);
    return counts;
}

double multiset_overlap(const Counts& cand, const Counts& ref) {
    std::int64_t matched = 0;
    std::int64_t ref_total = 0;
    for (const auto& [sig, count] : ref) {
        ref_total += count;
        auto it = cand.find(sig);
        if (it != cand.end()) matched += std::min(count, it->second);
    }
    if (ref_total == 0) return 1.0;
    return static_cast<double>(matched) / static_cast<double>(ref_total);
}

// --- dataflow matching -------------------------------------------------------

// A def-use edge: variable (renamed to its first-occurrence index), the row
// ordinal of the last write before the use (-1 when unbound), and the row
// ordinal of the use.
using Edge = std::tuple<int, int, int>;

std::set<Edge> dataflow_edges(const AstNode& module) {
    std::vector<RowAccess> rows = collect_row_accesses(module);
    std::unordered_map<std::string, int> var_index;
    std::unordered_map<std::string, int> last_write;
    auto index_of = [&](const std::string& name) {
        auto [it, inserted] = var_index.emplace(name, static_cast<int>(var_index.size()));
        return it->second;
    };
    std::set<Edge> edges;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        // Reads bind to writes from earlier rows only, so the row's own
        // writes (e.g. the target of `x = x + 1`) do not shadow its reads.
        for (const auto& ev : rows[r].events) {
            int id = index_of(ev.name);
            if (ev.write) continue;
            auto it = last_write.find(ev.name);
            int def_row = it == last_write.end() ? -1 : it->second;
            edges.emplace(id, def_row, static_cast<int>(r));
        }
        for (const auto& ev : rows[r].events)
            if (ev.write) last_write[ev.name] = static_cast<int>(r);
    }
    return edges;
}

double edge_overlap(const std::set<Edge>& cand, const std::set<Edge>& ref) {
    if (ref.empty()) return 1.0;
    std::size_t matched = 0;
    for (const auto& e : ref) matched += cand.count(e);
    return static_cast<double>(matched) / static_cast<double>(ref.size());
}

}  // namespace

std::vector<std::string> whitespace_tokens(const std::string& text) {
    std::vector<std::string> toks;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) toks.push_back(text.substr(start, i - start));
    }
    return toks;
}

double bleu(const std::vector<std::string>& candidate,
            const std::vector<std::string>& reference) {
    return bleu_impl(candidate, reference, /*weighted=*/false);
}

double rouge_n(const std::vector<std::string>& candidate,
               const std::vector<std::string>& reference, std::size_t n) {
    Counts cand = ngram_counts(candidate, n);
    Counts ref = ngram_counts(reference, n);
    std::int64_t cand_total = 0;
    std::int64_t ref_total = 0;
    std::int64_t matched = 0;
    for (const auto& [gram, count] : cand) cand_total += count;
    for (const auto& [gram, count] : ref) {
        ref_total += count;
        auto it = cand.find(gram);
        if (it != cand.end()) matched += std::min(count, it->second);
    }
    if (cand_total == 0 && ref_total == 0) return 1.0;
    if (cand_total == 0 || ref_total == 0 || matched == 0) return 0.0;
    double p = static_cast<double>(matched) / static_cast<double>(cand_total);
    double r = static_cast<double>(matched) / static_cast<double>(ref_total);
    return 2.0 * p * r / (p + r);
}

double rouge_l(const std::vector<std::string>& candidate,
               const std::vector<std::string>& reference) {
    if (candidate.empty() && reference.empty()) return 1.0;
    if (candidate.empty() || reference.empty()) return 0.0;
    std::size_t n = candidate.size();
    std::size_t m = reference.size();
    std::vector<std::size_t> prev(m + 1, 0);
    std::vector<std::size_t> cur(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            if (candidate[i - 1] == reference[j - 1])
                cur[j] = prev[j - 1] + 1;
            else
                cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    double lcs = static_cast<double>(prev[m]);
    if (lcs == 0.0) return 0.0;
    double p = lcs / static_cast<double>(n);
    double r = lcs / static_cast<double>(m);
    return 2.0 * p * r / (p + r);
}

CodeBleuParts codebleu_parts(const std::string& candidate_code,
                             const std::string& reference_code) {
    std::vector<std::string> cand_toks = whitespace_tokens(candidate_code);
    std::vector<std::string> ref_toks = whitespace_tokens(reference_code);

    CodeBleuParts parts;
    parts.ngram = bleu_impl(cand_toks, ref_toks, /*weighted=*/false);
    parts.weighted_ngram = bleu_impl(cand_toks, ref_toks, /*weighted=*/true);

    AstPtr ref_ast;
    try {
        ref_ast = parse_module(reference_code);
    } catch (const ParseError& e) {
        throw MetricError(std::string("reference code does not parse: ") + e.what());
    }
    AstPtr cand_ast;
    try {
        cand_ast = parse_module(candidate_code);
    } catch (const ParseError&) {
        parts.candidate_parse_failed = true;
        return parts;  // ast and dataflow stay 0.0
    }

    parts.ast = multiset_overlap(subtree_multiset(*cand_ast), subtree_multiset(*ref_ast));
    parts.dataflow = edge_overlap(dataflow_edges(*cand_ast), dataflow_edges(*ref_ast));
    return parts;
}

PairScores score_pair(const std::string& candidate_code,
                      const std::string& reference_code) {
    PairScores s;
    std::vector<std::string> cand = whitespace_tokens(candidate_code);
    std::vector<std::string> ref = whitespace_tokens(reference_code);
    s.empty_candidate = cand.empty();
    s.bleu = bleu(cand, ref);
    s.rouge1 = rouge_n(cand, ref, 1);
    s.rouge2 = rouge_n(cand, ref, 2);
    s.rouge_l = rouge_l(cand, ref);
    s.codebleu = codebleu_parts(candidate_code, reference_code);
    return s;
}

CorpusScores score_corpus(const std::vector<std::string>& candidates,
                          const std::vector<std::string>& references,
                          bool keep_per_record) {
    if (candidates.size() != references.size())
        throw MetricError("candidate count " + std::to_string(candidates.size()) +
                          " does not match reference count " +
                          std::to_string(references.size()));
    if (candidates.empty()) throw MetricError("nothing to score: empty input");

    CorpusScores out;
    out.pairs = candidates.size();
    std::array<OrderTally, kMaxOrder> pooled;
    double cand_len = 0.0;
    double ref_len = 0.0;

    for (std::size_t i = 0; i < candidates.size(); ++i) {
        PairScores pair = score_pair(candidates[i], references[i]);
        std::vector<std::string> cand = whitespace_tokens(candidates[i]);
        std::vector<std::string> ref = whitespace_tokens(references[i]);
        for (std::size_t n = 1; n <= kMaxOrder; ++n) {
            OrderTally t = tally_order(cand, ref, n, /*weighted=*/false);
            pooled[n - 1].matched += t.matched;
            pooled[n - 1].total += t.total;
            pooled[n - 1].ref_total += t.ref_total;
        }
        cand_len += static_cast<double>(cand.size());
        ref_len += static_cast<double>(ref.size());

        out.rouge1 += pair.rouge1;
        out.rouge2 += pair.rouge2;
        out.rouge_l += pair.rouge_l;
        out.codebleu += pair.codebleu.combined();
        out.mean_parts.ngram += pair.codebleu.ngram;
        out.mean_parts.weighted_ngram += pair.codebleu.weighted_ngram;
        out.mean_parts.ast += pair.codebleu.ast;
        out.mean_parts.dataflow += pair.codebleu.dataflow;
        if (pair.empty_candidate) ++out.empty_candidates;
        if (pair.codebleu.candidate_parse_failed) ++out.unparseable_candidates;
        if (keep_per_record) out.per_record.push_back(std::move(pair));
    }

    double count = static_cast<double>(out.pairs);
    out.bleu = combine_bleu(pooled, cand_len, ref_len);
    out.rouge1 /= count;
    out.rouge2 /= count;
    out.rouge_l /= count;
    out.codebleu /= count;
    out.mean_parts.ngram /= count;
    out.mean_parts.weighted_ngram /= count;
    out.mean_parts.ast /= count;
    out.mean_parts.dataflow /= count;
    return out;
}

}  // namespace flowgen
