#pragma once

#include <map>
#include <memory>
#include <string>

#include "aspire/describe.hpp"
#include "aspire/edit.hpp"
#include "aspire/generate.hpp"

namespace aspire {

/// Shared per-adapter invocation counters; the determinism/cache contract
/// ("warm rerun performs zero adapter calls") is asserted against these.
class AdapterCallCounters {
  public:
    void increment(const std::string& adapter_id) { counts_[adapter_id]++; }
    int count(const std::string& adapter_id) const {
        auto it = counts_.find(adapter_id);
        return it == counts_.end() ? 0 : it->second;
    }
    int total() const {
        int sum = 0;
        for (const auto& [id, n] : counts_) sum += n;
        return sum;
    }
    void reset() { counts_.clear(); }
    const std::map<std::string, int>& all() const { return counts_; }

  private:
    std::map<std::string, int> counts_;
};

class CountingCaptioner : public Captioner {
  public:
    CountingCaptioner(std::shared_ptr<Captioner> inner, std::shared_ptr<AdapterCallCounters> counters)
        : inner_(std::move(inner)), counters_(std::move(counters)) {}
    std::string caption(const LabeledImage& image) override {
        counters_->increment(inner_->id());
        return inner_->caption(image);
    }
    std::string id() const override { return inner_->id(); }

  private:
    std::shared_ptr<Captioner> inner_;
    std::shared_ptr<AdapterCallCounters> counters_;
};

class CountingExtractor : public Extractor {
  public:
    CountingExtractor(std::shared_ptr<Extractor> inner, std::shared_ptr<AdapterCallCounters> counters)
        : inner_(std::move(inner)), counters_(std::move(counters)) {}
    FeatureExtraction extract(const std::string& caption, const std::string& label) override {
        counters_->increment(inner_->id());
        return inner_->extract(caption, label);
    }
    std::string id() const override { return inner_->id(); }

  private:
    std::shared_ptr<Extractor> inner_;
    std::shared_ptr<AdapterCallCounters> counters_;
};

class CountingForegroundEditor : public ForegroundEditor {
  public:
    CountingForegroundEditor(std::shared_ptr<ForegroundEditor> inner,
                             std::shared_ptr<AdapterCallCounters> counters)
        : inner_(std::move(inner)), counters_(std::move(counters)) {}
    EditOutcome remove(const LabeledImage& image, const std::string& phrase) override {
        counters_->increment(inner_->id());
        return inner_->remove(image, phrase);
    }
    std::string id() const override { return inner_->id(); }

  private:
    std::shared_ptr<ForegroundEditor> inner_;
    std::shared_ptr<AdapterCallCounters> counters_;
};

class CountingBackgroundEditor : public BackgroundEditor {
  public:
    CountingBackgroundEditor(std::shared_ptr<BackgroundEditor> inner,
                             std::shared_ptr<AdapterCallCounters> counters)
        : inner_(std::move(inner)), counters_(std::move(counters)) {}
    EditOutcome swap(const LabeledImage& image, const std::string& background,
                     const std::string& alt_background) override {
        counters_->increment(inner_->id());
        return inner_->swap(image, background, alt_background);
    }
    std::string id() const override { return inner_->id(); }

  private:
    std::shared_ptr<BackgroundEditor> inner_;
    std::shared_ptr<AdapterCallCounters> counters_;
};

class CountingAltBackground : public AltBackgroundAdapter {
  public:
    CountingAltBackground(std::shared_ptr<AltBackgroundAdapter> inner,
                          std::shared_ptr<AdapterCallCounters> counters)
        : inner_(std::move(inner)), counters_(std::move(counters)) {}
    std::string suggest(const std::string& background) override {
        counters_->increment(inner_->id());
        return inner_->suggest(background);
    }
    std::string id() const override { return inner_->id(); }

  private:
    std::shared_ptr<AltBackgroundAdapter> inner_;
    std::shared_ptr<AdapterCallCounters> counters_;
};

class CountingGenerator : public GeneratorAdapter {
  public:
    CountingGenerator(std::shared_ptr<GeneratorAdapter> inner,
                      std::shared_ptr<AdapterCallCounters> counters)
        : inner_(std::move(inner)), counters_(std::move(counters)) {}
    PersonalizedGenerator personalize(const PersonalizationJob& job,
                                      const std::vector<const EditRecord*>& images) override {
        counters_->increment(inner_->id() + ":personalize");
        return inner_->personalize(job, images);
    }
    std::vector<LabeledImage> generate(const PersonalizedGenerator& handle, int count) override {
        counters_->increment(inner_->id() + ":generate");
        return inner_->generate(handle, count);
    }
    std::string id() const override { return inner_->id(); }

  private:
    std::shared_ptr<GeneratorAdapter> inner_;
    std::shared_ptr<AdapterCallCounters> counters_;
};

}  // namespace aspire
