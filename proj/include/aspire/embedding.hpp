#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace aspire {

double cosine(const std::vector<double>& a, const std::vector<double>& b);

/// Maps phrase roots to unit vectors. Implementations must be deterministic;
/// every string is embeddable (no errors).
class Embedder {
  public:
    virtual ~Embedder() = default;
    virtual std::vector<double> embed_root(const std::string& root) const = 0;
    virtual std::string id() const = 0;
};

/// Alias clusters: root phrases that should embed close together even though
/// their roots differ ("snow" vs "snowi mountain"). Shipped as a data file so
/// collapse behaviour is reproducible.
struct SynonymTable {
    // cluster name -> member root phrases (cluster name is itself a member)
    std::map<std::string, std::vector<std::string>> clusters;

    std::optional<std::string> cluster_of(const std::string& root) const;

    static SynonymTable builtin();
    static SynonymTable load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    bool operator==(const SynonymTable&) const = default;
};

/// Deterministic stand-in for pretrained word vectors: each root gets a
/// seeded-hash unit vector; roots in the same synonym cluster share a base
/// vector plus a small per-member offset (cosine >= 0.95 within a cluster),
/// unrelated roots land below 0.5 with high probability. Multi-word roots
/// embed as the renormalized mean of their token vectors unless the full
/// phrase is aliased.
class HashEmbedder : public Embedder {
  public:
    static constexpr int kDim = 64;

    explicit HashEmbedder(SynonymTable table, std::uint64_t seed = 0x5eed);
    static HashEmbedder with_builtin_synonyms();

    std::vector<double> embed_root(const std::string& root) const override;
    std::string id() const override { return "hash-embedder-v1"; }

  private:
    std::vector<double> base_vector(const std::string& key) const;
    std::vector<double> token_vector(const std::string& token) const;

    SynonymTable table_;
    std::uint64_t seed_;
};

/// Table-backed embedder for vectors loaded from disk (or injected by
/// tests). Roots absent from the table fall back to a seeded hash vector.
class MapEmbedder : public Embedder {
  public:
    MapEmbedder(std::map<std::string, std::vector<double>> table, std::string id,
                std::uint64_t fallback_seed = 77);

    std::vector<double> embed_root(const std::string& root) const override;
    std::string id() const override { return id_; }

  private:
    std::map<std::string, std::vector<double>> table_;
    std::string id_;
    std::uint64_t fallback_seed_;
};

}  // namespace aspire
