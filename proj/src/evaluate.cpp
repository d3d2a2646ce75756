#include "metaemb/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <Eigen/Dense>

#include "metaemb/error.hpp"
#include "metaemb/parallel.hpp"

namespace metaemb {
namespace {

// Fractional ranks (1-based) with ties assigned the average rank of the run.
std::vector<double> fractional_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] < values[b];
        return a < b;
    });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * (static_cast<double>(i + 1) +
                                  static_cast<double>(j + 1));
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

// Cosine between a double query and a stored float row, accumulated in
// double with ascending index order; the test oracles mirror this exactly.
double cosine_query_row(const double* q, double q_norm, const EmbeddingSet& emb,
                        std::uint32_t row) {
    const float* r = &emb.vectors(static_cast<Eigen::Index>(row), 0);
    double dot = 0.0, nn = 0.0;
    for (int j = 0; j < emb.dim; ++j) {
        dot += q[j] * static_cast<double>(r[j]);
        nn += static_cast<double>(r[j]) * static_cast<double>(r[j]);
    }
    if (nn == 0.0) return -2.0;  // never preferred over a real cosine
    if (q_norm == 0.0) return 0.0;
    return dot / (q_norm * std::sqrt(nn));
}

double cosine_rows(const EmbeddingSet& emb, std::uint32_t a, std::uint32_t b) {
    const float* ra = &emb.vectors(static_cast<Eigen::Index>(a), 0);
    const float* rb = &emb.vectors(static_cast<Eigen::Index>(b), 0);
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int j = 0; j < emb.dim; ++j) {
        const double x = static_cast<double>(ra[j]);
        const double y = static_cast<double>(rb[j]);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) return -2.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Shared by cosadd() and eval_analogy() so ties behave identically.
std::uint32_t cosadd_id(const EmbeddingSet& emb, std::uint32_t ia,
                        std::uint32_t ib, std::uint32_t ic) {
    Eigen::VectorXd target = emb.row(ib) - emb.row(ia) + emb.row(ic);
    const double t_norm = target.norm();
    double best = -3.0;
    std::uint32_t best_id = 0;
    bool found = false;
    for (std::uint32_t u = 0; u < emb.size(); ++u) {
        if (u == ia || u == ib || u == ic) continue;
        const double score = cosine_query_row(target.data(), t_norm, emb, u);
        if (!found || score > best) {
            best = score;
            best_id = u;
            found = true;
        }
    }
    if (!found) {
        throw Error("vocabulary has no candidate beyond the three query words",
                    "evalsuite");
    }
    return best_id;
}

std::uint32_t require_word(const EmbeddingSet& emb, const std::string& token) {
    const auto id = emb.vocab.lookup(token);
    if (!id) {
        throw Error("word '" + token + "' not in vocabulary", "evalsuite");
    }
    return *id;
}

double stable_sigmoid(double z) {
    if (z > 35.0) z = 35.0;
    if (z < -35.0) z = -35.0;
    return 1.0 / (1.0 + std::exp(-z));
}

// Full-batch gradient descent with a fixed 1/L step, run to gradient norm
// < 1e-6 or 5000 epochs. The intercept (last coordinate) is unregularised.
Eigen::VectorXd train_logreg(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             double reg) {
    const Eigen::Index m = x.rows();
    const Eigen::Index d = x.cols();
    const double lips = 0.25 * x.squaredNorm() / static_cast<double>(m) + reg;
    const double step = 1.0 / lips;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd grad(d);
    for (int epoch = 0; epoch < 5000; ++epoch) {
        Eigen::VectorXd p = (x * w).unaryExpr([](double z) {
            return stable_sigmoid(z);
        });
        grad.noalias() = x.transpose() * (p - y) / static_cast<double>(m);
        grad += reg * w;
        grad[d - 1] -= reg * w[d - 1];
        if (grad.norm() < 1e-6) break;
        w -= step * grad;
    }
    return w;
}

double logreg_accuracy(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& w, std::size_t* correct_out,
                       std::size_t* total_out) {
    std::size_t correct = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const int pred = x.row(i).dot(w) >= 0.0 ? 1 : 0;
        if (pred == static_cast<int>(y[i])) ++correct;
    }
    if (correct_out) *correct_out = correct;
    if (total_out) *total_out = static_cast<std::size_t>(x.rows());
    return x.rows() == 0
               ? 0.0
               : static_cast<double>(correct) / static_cast<double>(x.rows());
}

// Document centroid over in-vocabulary tokens, plus intercept slot.
Eigen::VectorXd doc_vector(const EmbeddingSet& emb,
                           const std::vector<std::string>& tokens) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(emb.dim + 1);
    std::size_t used = 0;
    for (const auto& t : tokens) {
        const auto id = emb.vocab.lookup(t);
        if (!id) continue;
        v.head(emb.dim) += emb.row(*id);
        ++used;
    }
    if (used > 0) v.head(emb.dim) /= static_cast<double>(used);
    v[emb.dim] = 1.0;
    return v;
}

}  // namespace

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) {
        throw Error("rank correlation inputs differ in length", "evalsuite");
    }
    if (xs.size() < 2) {
        throw Error("rank correlation needs at least two observations",
                    "evalsuite");
    }
    const std::vector<double> rx = fractional_ranks(xs);
    const std::vector<double> ry = fractional_ranks(ys);
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = rx[i] - mx;
        const double dy = ry[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw Error("rank correlation undefined: an input has zero rank "
                    "variance",
                    "evalsuite");
    }
    return sxy / std::sqrt(sxx * syy);
}

SimilarityResult eval_similarity(const EmbeddingSet& emb,
                                 const SimilarityDataset& ds) {
    SimilarityResult res;
    res.total = ds.pairs.size();
    std::vector<double> human;
    std::vector<double> model;
    for (const auto& pair : ds.pairs) {
        const auto i1 = emb.vocab.lookup(pair.word1);
        const auto i2 = emb.vocab.lookup(pair.word2);
        if (!i1 || !i2) continue;
        human.push_back(pair.score);
        model.push_back(cosine_rows(emb, *i1, *i2));
    }
    res.evaluated = human.size();
    res.coverage = res.total == 0 ? 0.0
                                  : static_cast<double>(res.evaluated) /
                                        static_cast<double>(res.total);
    if (res.evaluated < 2) {
        throw Error("fewer than two fully covered pairs; correlation "
                    "undefined",
                    "evalsuite");
    }
    res.rho = spearman(model, human);
    return res;
}

std::string cosadd(const EmbeddingSet& emb, const std::string& a,
                   const std::string& b, const std::string& c) {
    const std::uint32_t ia = require_word(emb, a);
    const std::uint32_t ib = require_word(emb, b);
    const std::uint32_t ic = require_word(emb, c);
    return emb.vocab.word(cosadd_id(emb, ia, ib, ic));
}

AnalogyResult eval_analogy(const EmbeddingSet& emb, const AnalogyDataset& ds,
                           int threads) {
    AnalogyResult res;
    res.total = ds.questions.size();

    struct Query {
        std::uint32_t a, b, c, d;
    };
    std::vector<Query> queries;
    for (const auto& q : ds.questions) {
        const auto ia = emb.vocab.lookup(q.a);
        const auto ib = emb.vocab.lookup(q.b);
        const auto ic = emb.vocab.lookup(q.c);
        const auto id = emb.vocab.lookup(q.d);
        if (!ia || !ib || !ic || !id) continue;
        queries.push_back(Query{*ia, *ib, *ic, *id});
    }
    res.evaluated = queries.size();
    res.coverage = res.total == 0 ? 0.0
                                  : static_cast<double>(res.evaluated) /
                                        static_cast<double>(res.total);
    if (queries.empty()) {
        res.defined = false;
        return res;
    }
    std::vector<std::uint8_t> correct(queries.size(), 0);
    parallel_for(std::size_t{0}, queries.size(), threads, [&](std::size_t i) {
        const Query& q = queries[i];
        correct[i] = cosadd_id(emb, q.a, q.b, q.c) == q.d ? 1 : 0;
    });
    std::size_t hits = 0;
    for (auto c : correct) hits += c;
    res.defined = true;
    res.accuracy = static_cast<double>(hits) / static_cast<double>(queries.size());
    return res;
}

RelationResult eval_relation(const EmbeddingSet& emb, const RelationDataset& ds,
                             int threads) {
    RelationResult res;
    res.total = ds.triples.size();

    struct Offset {
        const std::string* relation;
        Eigen::VectorXd vec;
        double norm;
    };
    std::vector<Offset> offsets;
    for (const auto& t : ds.triples) {
        const auto i1 = emb.vocab.lookup(t.word1);
        const auto i2 = emb.vocab.lookup(t.word2);
        if (!i1 || !i2) continue;
        Eigen::VectorXd vec = emb.row(*i2) - emb.row(*i1);
        const double norm = vec.norm();
        if (norm == 0.0) {
            ++res.zero_offset_skipped;
            continue;
        }
        offsets.push_back(Offset{&t.relation, std::move(vec), norm});
    }
    res.evaluated = offsets.size();
    res.coverage = res.total == 0 ? 0.0
                                  : static_cast<double>(res.evaluated) /
                                        static_cast<double>(res.total);
    if (offsets.size() < 2) {
        throw Error("fewer than two usable relation triples after coverage "
                    "and zero-offset skipping",
                    "evalsuite");
    }
    std::vector<std::uint8_t> correct(offsets.size(), 0);
    parallel_for(std::size_t{0}, offsets.size(), threads, [&](std::size_t i) {
        double best = -3.0;
        std::size_t best_j = 0;
        bool found = false;
        for (std::size_t j = 0; j < offsets.size(); ++j) {
            if (j == i) continue;
            const double cos =
                offsets[i].vec.dot(offsets[j].vec) /
                (offsets[i].norm * offsets[j].norm);
            if (!found || cos > best) {
                best = cos;
                best_j = j;
                found = true;
            }
        }
        correct[i] = *offsets[i].relation == *offsets[best_j].relation ? 1 : 0;
    });
    std::size_t hits = 0;
    for (auto c : correct) hits += c;
    res.accuracy = static_cast<double>(hits) / static_cast<double>(offsets.size());
    return res;
}

TextResult eval_text(const EmbeddingSet& emb, const TextDataset& ds, int folds,
                     std::vector<double> reg_grid, int threads) {
    if (folds < 2) throw Error("cross-validation needs >= 2 folds", "evalsuite");
    if (reg_grid.empty()) {
        reg_grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
    }
    if (ds.train.empty() || ds.test.empty()) {
        throw Error("text evaluation needs non-empty train and test splits",
                    "evalsuite");
    }
    bool has0 = false, has1 = false;
    for (const auto& doc : ds.train) (doc.label == 0 ? has0 : has1) = true;
    if (!has0 || !has1) {
        throw Error("training split does not contain both classes",
                    "evalsuite");
    }

    const Eigen::Index m = static_cast<Eigen::Index>(ds.train.size());
    const Eigen::Index mt = static_cast<Eigen::Index>(ds.test.size());
    Eigen::MatrixXd xtrain(m, emb.dim + 1);
    Eigen::VectorXd ytrain(m);
    Eigen::MatrixXd xtest(mt, emb.dim + 1);
    Eigen::VectorXd ytest(mt);
    parallel_for(std::size_t{0}, ds.train.size(), threads, [&](std::size_t i) {
        xtrain.row(static_cast<Eigen::Index>(i)) =
            doc_vector(emb, ds.train[i].tokens);
        ytrain[static_cast<Eigen::Index>(i)] = ds.train[i].label;
    });
    parallel_for(std::size_t{0}, ds.test.size(), threads, [&](std::size_t i) {
        xtest.row(static_cast<Eigen::Index>(i)) =
            doc_vector(emb, ds.test[i].tokens);
        ytest[static_cast<Eigen::Index>(i)] = ds.test[i].label;
    });

    // Regulariser selection: pooled validation accuracy across folds.
    double best_reg = reg_grid[0];
    double best_acc = -1.0;
    for (const double reg : reg_grid) {
        std::size_t pooled_correct = 0;
        std::size_t pooled_total = 0;
        for (int fold = 0; fold < folds; ++fold) {
            std::vector<Eigen::Index> tr, va;
            for (Eigen::Index i = 0; i < m; ++i) {
                (static_cast<int>(i) % folds == fold ? va : tr).push_back(i);
            }
            if (tr.empty() || va.empty()) continue;
            bool f0 = false, f1 = false;
            for (Eigen::Index i : tr) (ytrain[i] == 0.0 ? f0 : f1) = true;
            if (!f0 || !f1) {
                std::fprintf(stderr,
                             "warning: fold %d has a single-class training "
                             "split; skipped\n",
                             fold);
                continue;
            }
            Eigen::MatrixXd xf(static_cast<Eigen::Index>(tr.size()), emb.dim + 1);
            Eigen::VectorXd yf(static_cast<Eigen::Index>(tr.size()));
            for (std::size_t r = 0; r < tr.size(); ++r) {
                xf.row(static_cast<Eigen::Index>(r)) = xtrain.row(tr[r]);
                yf[static_cast<Eigen::Index>(r)] = ytrain[tr[r]];
            }
            const Eigen::VectorXd w = train_logreg(xf, yf, reg);
            for (Eigen::Index i : va) {
                const int pred = xtrain.row(i).dot(w) >= 0.0 ? 1 : 0;
                if (pred == static_cast<int>(ytrain[i])) ++pooled_correct;
                ++pooled_total;
            }
        }
        const double acc = pooled_total == 0
                               ? 0.0
                               : static_cast<double>(pooled_correct) /
                                     static_cast<double>(pooled_total);
        if (acc > best_acc) {
            best_acc = acc;
            best_reg = reg;
        }
    }

    const Eigen::VectorXd w = train_logreg(xtrain, ytrain, best_reg);
    TextResult res;
    res.chosen_reg = best_reg;
    res.train_docs = ds.train.size();
    res.test_docs = ds.test.size();
    res.accuracy = logreg_accuracy(xtest, ytest, w, nullptr, nullptr);
    return res;
}

}  // namespace metaemb
