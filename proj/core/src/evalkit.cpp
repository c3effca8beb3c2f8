#include "castor/evalkit.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include "castor/corpus.hpp"
#include "castor/random.hpp"
#include "castor/text_util.hpp"
#include "json.hpp"

namespace castor {

using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

MetricsReport metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw EmptyMatrix("confusion matrix has no entries");

    MetricsReport r;
    r.confusion = cm;
    r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    if (cm.tp + cm.fp > 0) {
        r.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
    }
    if (cm.tp + cm.fn > 0) {
        r.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
    }
    if (r.precision && r.recall && (*r.precision + *r.recall) > 0.0) {
        r.f1 = 2.0 * *r.precision * *r.recall / (*r.precision + *r.recall);
    }
    return r;
}

ConfusionMatrix confusion_from_outcomes(const std::vector<PairOutcome>& outcomes) {
    ConfusionMatrix cm;
    for (const PairOutcome& o : outcomes) {
        if (o.true_ai && o.predicted_ai) ++cm.tp;
        if (!o.true_ai && o.predicted_ai) ++cm.fp;
        if (o.true_ai && !o.predicted_ai) ++cm.fn;
        if (!o.true_ai && !o.predicted_ai) ++cm.tn;
    }
    return cm;
}

namespace {

std::string bucket_label(std::size_t lo, std::optional<std::size_t> hi) {
    if (hi) return "[" + std::to_string(lo) + "," + std::to_string(*hi) + ")";
    return "[" + std::to_string(lo) + ",inf)";
}

MetricsReport metrics_or_empty(const ConfusionMatrix& cm) {
    if (cm.total() == 0) {
        MetricsReport r;
        r.confusion = cm;
        return r;  // all metrics undefined for an empty bucket
    }
    return metrics(cm);
}

}  // namespace

std::vector<std::pair<std::string, MetricsReport>> bucket_by_length(
    const std::vector<PairOutcome>& outcomes, const std::vector<std::size_t>& boundaries) {
    for (std::size_t i = 1; i < boundaries.size(); ++i) {
        if (boundaries[i] <= boundaries[i - 1]) {
            throw BadBoundaries("bucket boundaries must be strictly increasing");
        }
    }

    const std::size_t num_buckets = boundaries.size() + 1;
    std::vector<ConfusionMatrix> cms(num_buckets);
    for (const PairOutcome& o : outcomes) {
        std::size_t b = 0;
        while (b < boundaries.size() && o.candidate_tokens >= boundaries[b]) ++b;
        if (o.true_ai && o.predicted_ai) ++cms[b].tp;
        if (!o.true_ai && o.predicted_ai) ++cms[b].fp;
        if (o.true_ai && !o.predicted_ai) ++cms[b].fn;
        if (!o.true_ai && !o.predicted_ai) ++cms[b].tn;
    }

    std::vector<std::pair<std::string, MetricsReport>> out;
    for (std::size_t b = 0; b < num_buckets; ++b) {
        std::size_t lo = b == 0 ? 0 : boundaries[b - 1];
        std::optional<std::size_t> hi;
        if (b < boundaries.size()) hi = boundaries[b];
        out.emplace_back(bucket_label(lo, hi), metrics_or_empty(cms[b]));
    }
    return out;
}

MetricsReport evaluate(const Detector& detector, const std::vector<TripletRecord>& test,
                       double threshold, const std::vector<std::size_t>& boundaries) {
    if (test.empty()) throw EmptyMatrix("cannot evaluate an empty test set");

    std::vector<std::pair<std::string, std::string>> pairs;
    std::vector<bool> truth;
    pairs.reserve(test.size() * 2);
    for (const TripletRecord& t : test) {
        pairs.emplace_back(t.reference_answer, t.ai_answer);
        truth.push_back(true);
        pairs.emplace_back(t.reference_answer, t.human_answer);
        truth.push_back(false);
    }

    std::vector<BatchItem> items = detector.detect_batch(pairs, threshold);
    std::vector<PairOutcome> outcomes;
    outcomes.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (!items[i].verdict) {
            throw std::runtime_error("evaluation pair " + std::to_string(i) +
                                     " failed: " + items[i].error);
        }
        const Verdict& v = *items[i].verdict;
        outcomes.push_back({truth[i], v.label == DetectLabel::AiGenerated,
                            v.candidate_token_length, v.similarity});
    }

    MetricsReport report = metrics(confusion_from_outcomes(outcomes));
    report.buckets = bucket_by_length(outcomes, boundaries);
    return report;
}

// ---------------------------------------------------------------------------
// Attacks
// ---------------------------------------------------------------------------

std::string_view to_string(AttackKind kind) {
    return kind == AttackKind::CharPerturb ? "char-perturb" : "synonym-sub";
}

AttackKind attack_kind_from_string(std::string_view name) {
    if (name == "char-perturb") return AttackKind::CharPerturb;
    if (name == "synonym-sub") return AttackKind::SynonymSub;
    throw std::invalid_argument("unknown attack kind '" + std::string(name) + "'");
}

void AttackSpec::validate() const {
    if (kind == AttackKind::SynonymSub && lexicon_path.empty()) {
        throw LexiconMissing("synonym-sub attack requires a lexicon path");
    }
}

SynonymLexicon load_lexicon(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LexiconMissing("cannot open synonym lexicon '" + path + "'");

    SynonymLexicon lexicon;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (strip(line).empty()) continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos) continue;  // malformed line: skip quietly
        std::string word = to_lower_ascii(strip(line.substr(0, tab)));
        std::vector<std::string> synonyms;
        std::string rest = line.substr(tab + 1);
        std::size_t start = 0;
        while (start <= rest.size()) {
            std::size_t comma = rest.find(',', start);
            std::string syn(strip(rest.substr(
                start, comma == std::string::npos ? std::string::npos : comma - start)));
            if (!syn.empty()) synonyms.push_back(to_lower_ascii(syn));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (!word.empty() && !synonyms.empty()) lexicon[word] = std::move(synonyms);
    }
    return lexicon;
}

namespace {

// Alternating separator/word decomposition that reassembles verbatim:
// parts[0] is (possibly empty) leading whitespace, then word, separator,
// word, ... with separators preserved exactly.
struct SplitText {
    std::vector<std::string> words;
    std::vector<std::string> separators;  // separators[i] precedes words[i]
    std::string trailing;

    std::string join() const {
        std::string out;
        for (std::size_t i = 0; i < words.size(); ++i) {
            out += separators[i];
            out += words[i];
        }
        out += trailing;
        return out;
    }
};

SplitText split_preserving(const std::string& text) {
    SplitText st;
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t sep_start = i;
        while (i < text.size() && is_space_char(text[i])) ++i;
        std::string sep = text.substr(sep_start, i - sep_start);
        if (i >= text.size()) {
            st.trailing = sep;
            break;
        }
        std::size_t word_start = i;
        while (i < text.size() && !is_space_char(text[i])) ++i;
        st.separators.push_back(std::move(sep));
        st.words.push_back(text.substr(word_start, i - word_start));
    }
    return st;
}

}  // namespace

std::string attack_char_perturb(const std::string& text, const AttackSpec& spec) {
    if (spec.budget == 0 || text.empty()) return text;

    SplitText st = split_preserving(text);
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < st.words.size(); ++i) {
        if (st.words[i].size() >= 3) eligible.push_back(i);
    }
    if (eligible.empty()) return text;

    RandomEngine engine(spec.seed);
    std::size_t k = std::min(spec.budget, eligible.size());
    std::vector<std::size_t> picks = engine.sample_indices(eligible.size(), k);
    std::vector<std::size_t> targets;
    targets.reserve(k);
    for (std::size_t p : picks) targets.push_back(eligible[p]);
    std::sort(targets.begin(), targets.end());  // edit in text order

    for (std::size_t t : targets) {
        std::string& w = st.words[t];
        switch (engine.bounded(4)) {
            case 0: {  // substitute one character
                std::size_t pos = static_cast<std::size_t>(engine.bounded(w.size()));
                w[pos] = static_cast<char>('a' + engine.bounded(26));
                break;
            }
            case 1: {  // swap two adjacent characters
                std::size_t pos = static_cast<std::size_t>(engine.bounded(w.size() - 1));
                std::swap(w[pos], w[pos + 1]);
                break;
            }
            case 2: {  // delete one character
                std::size_t pos = static_cast<std::size_t>(engine.bounded(w.size()));
                w.erase(pos, 1);
                break;
            }
            default: {  // insert one random letter
                std::size_t pos = static_cast<std::size_t>(engine.bounded(w.size() + 1));
                w.insert(w.begin() + static_cast<std::ptrdiff_t>(pos),
                         static_cast<char>('a' + engine.bounded(26)));
                break;
            }
        }
    }
    return st.join();
}

std::string attack_synonym_sub(const std::string& text, const AttackSpec& spec,
                               const Detector& detector, const std::string& reference) {
    if (spec.budget == 0) return text;
    SynonymLexicon lexicon = load_lexicon(spec.lexicon_path);
    if (lexicon.empty()) return text;

    // Work on the cleaned form: word/token alignment is computed against it,
    // and the detector cleans idempotently, so the similarity measured here
    // is exactly what a later evaluation of the attacked text will see.
    std::string cleaned = clean_text(text);
    SplitText st = split_preserving(cleaned);
    if (st.words.empty()) return text;

    Tensor<float> ref_vec = detector.embed(reference);
    auto similarity_of = [&](const SplitText& s) {
        return detector.similarity_to(ref_vec, detector.tokenize(clean_text(s.join())));
    };

    // Token span of each word inside the encoded sequence.  Tokens never
    // cross whitespace, so per-word tokenization concatenates to the full
    // tokenization; position 0 is CLS.
    TokenSeq base_seq = detector.tokenize(cleaned);
    std::vector<std::pair<std::size_t, std::size_t>> spans;  // [begin, end) in ids
    {
        std::size_t cursor = 1;  // skip CLS
        for (const std::string& w : st.words) {
            std::size_t count = word_tokenize(w).size();
            spans.emplace_back(cursor, cursor + count);
            cursor += count;
        }
    }

    double base_sim = detector.similarity_to(ref_vec, base_seq);

    // Leave-one-out saliency over lexicon-covered words only.
    struct Target {
        std::size_t word_index;
        double saliency;
    };
    std::vector<Target> targets;
    for (std::size_t i = 0; i < st.words.size(); ++i) {
        if (!lexicon.count(to_lower_ascii(st.words[i]))) continue;
        auto [begin, end] = spans[i];
        end = std::min(end, base_seq.length_real);
        if (begin >= end) continue;  // truncated away: unmaskable, zero effect

        TokenSeq masked = base_seq;
        for (std::size_t p = begin; p < end; ++p) masked.ids[p] = Vocab::kUnk;
        double sim = detector.similarity_to(ref_vec, masked);
        targets.push_back({i, base_sim - sim});
    }
    if (targets.empty()) return text;

    // Highest saliency first; ties go to the earlier position.
    std::stable_sort(targets.begin(), targets.end(), [](const Target& a, const Target& b) {
        if (a.saliency != b.saliency) return a.saliency > b.saliency;
        return a.word_index < b.word_index;
    });
    if (targets.size() > spec.budget) targets.resize(spec.budget);

    // Greedy replacement: pick the similarity-minimizing synonym for each
    // target, committing it only when similarity does not rise, so the final
    // similarity can never exceed the original.
    double current_sim = base_sim;
    for (const Target& target : targets) {
        const std::string key = to_lower_ascii(st.words[target.word_index]);
        const std::vector<std::string>& synonyms = lexicon.at(key);
        const std::string original = st.words[target.word_index];

        std::string best_syn;
        double best_sim = std::numeric_limits<double>::infinity();
        for (const std::string& syn : synonyms) {
            st.words[target.word_index] = syn;
            double sim = similarity_of(st);
            if (sim < best_sim) {
                best_sim = sim;
                best_syn = syn;
            }
        }
        if (!best_syn.empty() && best_sim <= current_sim) {
            st.words[target.word_index] = best_syn;
            current_sim = best_sim;
        } else {
            st.words[target.word_index] = original;
        }
    }
    return st.join();
}

std::pair<MetricsReport, MetricsReport> robustness_eval(const Detector& detector,
                                                        const std::vector<TripletRecord>& test,
                                                        double threshold,
                                                        const AttackSpec& spec) {
    MetricsReport clean = evaluate(detector, test, threshold);

    std::vector<TripletRecord> attacked = test;
    for (std::size_t i = 0; i < attacked.size(); ++i) {
        AttackSpec item_spec = spec;
        item_spec.seed = spec.seed + i;  // per-item stream, still deterministic
        if (spec.kind == AttackKind::CharPerturb) {
            attacked[i].ai_answer = attack_char_perturb(attacked[i].ai_answer, item_spec);
        } else {
            attacked[i].ai_answer = attack_synonym_sub(attacked[i].ai_answer, item_spec,
                                                       detector, attacked[i].reference_answer);
        }
    }

    MetricsReport after = evaluate(detector, attacked, threshold);
    return {std::move(clean), std::move(after)};
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

std::string metric_value(const std::optional<double>& m) {
    if (!m) return "undefined";
    std::ostringstream os;
    os.precision(17);
    os << *m;
    return os.str();
}

void flat_lines(const MetricsReport& r, const std::string& prefix, std::ostringstream& os) {
    os << prefix << "accuracy\t" << metric_value(r.accuracy) << '\n';
    os << prefix << "precision\t" << metric_value(r.precision) << '\n';
    os << prefix << "recall\t" << metric_value(r.recall) << '\n';
    os << prefix << "f1\t" << metric_value(r.f1) << '\n';
    os << prefix << "tp\t" << r.confusion.tp << '\n';
    os << prefix << "fp\t" << r.confusion.fp << '\n';
    os << prefix << "fn\t" << r.confusion.fn << '\n';
    os << prefix << "tn\t" << r.confusion.tn << '\n';
    for (const auto& [label, sub] : r.buckets) {
        flat_lines(sub, prefix + "bucket" + label + ".", os);
    }
}

ordered_json report_json(const MetricsReport& r) {
    auto metric = [](const std::optional<double>& m) {
        return m ? ordered_json(*m) : ordered_json("undefined");
    };
    ordered_json j{{"accuracy", metric(r.accuracy)},
                   {"precision", metric(r.precision)},
                   {"recall", metric(r.recall)},
                   {"f1", metric(r.f1)},
                   {"confusion", ordered_json{{"tp", r.confusion.tp},
                                              {"fp", r.confusion.fp},
                                              {"fn", r.confusion.fn},
                                              {"tn", r.confusion.tn}}}};
    if (!r.buckets.empty()) {
        ordered_json buckets = ordered_json::array();
        for (const auto& [label, sub] : r.buckets) {
            ordered_json b = report_json(sub);
            b["bucket"] = label;
            buckets.push_back(std::move(b));
        }
        j["buckets"] = std::move(buckets);
    }
    return j;
}

}  // namespace

std::string render_flat(const MetricsReport& report, const std::string& prefix) {
    std::ostringstream os;
    flat_lines(report, prefix, os);
    return os.str();
}

std::string render_json(const MetricsReport& report) { return report_json(report).dump(); }

std::string render_robustness_flat(const MetricsReport& clean, const MetricsReport& attacked) {
    return render_flat(clean, "clean.") + render_flat(attacked, "attacked.");
}

std::string render_robustness_json(const MetricsReport& clean, const MetricsReport& attacked) {
    return ordered_json{{"clean", report_json(clean)}, {"attacked", report_json(attacked)}}
        .dump();
}

}  // namespace castor
