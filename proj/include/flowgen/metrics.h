#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace flowgen {

// Whitespace tokenization used by every text metric here.
std::vector<std::string> whitespace_tokens(const std::string& text);

// Sentence BLEU with n-grams up to 4, clipped counts and brevity penalty.
// A zero n-gram precision is smoothed to 1 / (2 * candidate length); an
// order with no n-grams on either side is treated as a vacuous match so an
// exact copy always scores 1.0.  An empty candidate scores 0.0.
double bleu(const std::vector<std::string>& candidate,
            const std::vector<std::string>& reference);

// ROUGE-N F1 over clipped n-gram overlap (n = 1 or 2 in practice).
double rouge_n(const std::vector<std::string>& candidate,
               const std::vector<std::string>& reference, std::size_t n);

// ROUGE-L F1 over the longest common subsequence.
double rouge_l(const std::vector<std::string>& candidate,
               const std::vector<std::string>& reference);

// The four equally weighted CodeBLEU ingredients.  `ngram` is plain BLEU on
// whitespace tokens; `weighted_ngram` gives Python keywords weight 5 in the
// unigram counts; `ast` is the ratio of matched depth-limited subtree shapes
// (identifiers and literals blanked); `dataflow` is the ratio of matched
// def-use edges with variables renamed to first-occurrence indices.
struct CodeBleuParts {
    double ngram = 0.0;
    double weighted_ngram = 0.0;
    double ast = 0.0;
    double dataflow = 0.0;
    bool candidate_parse_failed = false;

    double combined() const {
        return 0.25 * (ngram + weighted_ngram + ast + dataflow);
    }
};

// Score one candidate against one reference, both plain Python source (decode
// any sentinels before calling).  A candidate that does not parse gets 0 for
// the ast and dataflow parts and is flagged; a reference that does not parse
// throws MetricError.
CodeBleuParts codebleu_parts(const std::string& candidate_code,
                             const std::string& reference_code);

struct PairScores {
    double bleu = 0.0;
    double rouge1 = 0.0;
    double rouge2 = 0.0;
    double rouge_l = 0.0;
    CodeBleuParts codebleu;
    bool empty_candidate = false;
};

PairScores score_pair(const std::string& candidate_code,
                      const std::string& reference_code);

// Corpus roll-up: BLEU is micro-averaged (counts pooled across pairs before
// combining); ROUGE and CodeBLEU are macro-averaged (mean of per-pair
// scores).  Throws MetricError when the lists are empty or differ in size.
struct CorpusScores {
    std::size_t pairs = 0;
    double bleu = 0.0;
    double rouge1 = 0.0;
    double rouge2 = 0.0;
    double rouge_l = 0.0;
    double codebleu = 0.0;
    CodeBleuParts mean_parts;
    std::size_t empty_candidates = 0;
    std::size_t unparseable_candidates = 0;
    std::vector<PairScores> per_record;  // filled when keep_per_record is set
};

CorpusScores score_corpus(const std::vector<std::string>& candidates,
                          const std::vector<std::string>& references,
                          bool keep_per_record = false);

}  // namespace flowgen
