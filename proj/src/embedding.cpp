#include "aspire/embedding.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "aspire/common.hpp"
#include "aspire/text.hpp"

namespace aspire {

using nlohmann::json;

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty()) return 0.0;
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::optional<std::string> SynonymTable::cluster_of(const std::string& root) const {
    for (const auto& [cluster, members] : clusters) {
        if (cluster == root) return cluster;
        for (const auto& m : members)
            if (m == root) return cluster;
    }
    return std::nullopt;
}

SynonymTable SynonymTable::builtin() {
    SynonymTable t;
    // Keys and members are phrase *roots* (stopword-stripped, Porter-stemmed).
    t.clusters = {
        {"snow", {"snow", "snowi", "snowi mountain", "snowi hill", "snowi landscap",
                  "snowi slope", "snowi mountain side"}},
        {"water", {"water", "ocean", "sea", "lake", "pond", "stream", "river"}},
        {"forest", {"forest", "wood", "bamboo forest", "tree"}},
        {"field", {"field", "grass field", "grassi field", "green field", "meadow"}},
        {"beach", {"beach", "sandi beach", "sand"}},
        {"mountain", {"mountain", "mountain top", "mountain side"}},
    };
    return t;
}

SynonymTable SynonymTable::load(const std::filesystem::path& path) {
    json j = json::parse(read_file(path));
    SynonymTable t;
    for (const auto& [cluster, members] : j.at("clusters").items())
        t.clusters[cluster] = members.get<std::vector<std::string>>();
    return t;
}

void SynonymTable::save(const std::filesystem::path& path) const {
    json members = json::object();
    for (const auto& [cluster, list] : clusters) members[cluster] = list;
    atomic_write(path, json{{"clusters", members}}.dump(2) + "\n");
}

namespace {

std::vector<double> normalized(std::vector<double> v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0)
        for (double& x : v) x /= norm;
    return v;
}

}  // namespace

HashEmbedder::HashEmbedder(SynonymTable table, std::uint64_t seed)
    : table_(std::move(table)), seed_(seed) {}

HashEmbedder HashEmbedder::with_builtin_synonyms() {
    return HashEmbedder(SynonymTable::builtin());
}

std::vector<double> HashEmbedder::base_vector(const std::string& key) const {
    Rng rng(seed_ ^ fnv1a64("embed:" + key));
    std::vector<double> v(kDim);
    for (double& x : v) x = rng.normal();
    return normalized(std::move(v));
}

std::vector<double> HashEmbedder::token_vector(const std::string& token) const {
    if (auto cluster = table_.cluster_of(token)) {
        std::vector<double> base = base_vector("cluster:" + *cluster);
        std::vector<double> jitter = base_vector("member:" + token);
        for (int i = 0; i < kDim; ++i) base[i] += 0.18 * jitter[i];
        return normalized(std::move(base));
    }
    return base_vector("token:" + token);
}

std::vector<double> HashEmbedder::embed_root(const std::string& root) const {
    const std::string key = normalize_phrase(root);
    if (table_.cluster_of(key)) return token_vector(key);

    std::vector<std::string> tokens = tokenize_words(key);
    if (tokens.empty()) return base_vector("token:");
    if (tokens.size() == 1) return token_vector(tokens[0]);

    std::vector<double> sum(kDim, 0.0);
    for (const auto& t : tokens) {
        std::vector<double> v = token_vector(t);
        for (int i = 0; i < kDim; ++i) sum[i] += v[i];
    }
    return normalized(std::move(sum));
}

MapEmbedder::MapEmbedder(std::map<std::string, std::vector<double>> table, std::string id,
                         std::uint64_t fallback_seed)
    : table_(std::move(table)), id_(std::move(id)), fallback_seed_(fallback_seed) {}

std::vector<double> MapEmbedder::embed_root(const std::string& root) const {
    auto it = table_.find(normalize_phrase(root));
    if (it != table_.end()) return it->second;
    std::size_t dim = table_.empty() ? 32 : table_.begin()->second.size();
    Rng rng(fallback_seed_ ^ fnv1a64(root));
    std::vector<double> v(dim);
    for (double& x : v) x = rng.normal();
    return normalized(std::move(v));
}

}  // namespace aspire
