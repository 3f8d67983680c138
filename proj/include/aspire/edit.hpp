#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aspire/core.hpp"
#include "aspire/synthbench.hpp"

namespace aspire {

enum class EditKind { remove_foreground, swap_background };
enum class Verdict { pending, kept_correct, flagged_spurious, edit_failed };

std::string edit_kind_name(EditKind k);
EditKind edit_kind_from_name(const std::string& s);
std::string verdict_name(Verdict v);
Verdict verdict_from_name(const std::string& s);

struct BBox {
    int x = 0, y = 0, width = 0, height = 0;
};

struct Mask {
    int height = 0, width = 0;
    std::vector<std::uint8_t> data;  // 0/1 per pixel
};

/// One probe: an edit applied to a source image plus the classifier's later
/// verdict. `phrase` is the removed object f, or the ORIGINAL background b
/// for swaps (what enters the phrase tally when flagged).
struct EditRecord {
    std::string source_id;
    std::string source_label;
    EditKind kind = EditKind::remove_foreground;
    std::string phrase;
    std::optional<std::string> alt_phrase;  // swaps only
    std::optional<LabeledImage> edited;
    std::optional<BBox> bbox;
    std::optional<Mask> mask;
    Verdict verdict = Verdict::pending;
    std::string fail_reason;  // set when verdict == edit_failed
    std::string adapter_id;
    std::uint64_t seed = 0;

    /// Cache key: every record is reproducible from
    /// (source id, kind, phrases, adapter id, seed).
    std::string record_id() const;

    nlohmann::json to_json(bool include_pixels_ref = true) const;
};

/// Either an edited image (with optional localization artifacts) or a
/// structured failure.
struct EditOutcome {
    std::optional<LabeledImage> edited;
    std::optional<BBox> bbox;
    std::optional<Mask> mask;
    std::string fail_reason;  // "not_found", "inpaint_error", ... empty on success
};

/// Three-stage contract (localize -> segment -> inpaint); adapters may fuse
/// stages, as the exact oracle does by re-rendering.
class ForegroundEditor {
  public:
    virtual ~ForegroundEditor() = default;
    virtual EditOutcome remove(const LabeledImage& image, const std::string& phrase) = 0;
    virtual std::string id() const = 0;
};

class BackgroundEditor {
  public:
    virtual ~BackgroundEditor() = default;
    virtual EditOutcome swap(const LabeledImage& image, const std::string& background,
                             const std::string& alt_background) = 0;
    virtual std::string id() const = 0;
};

class OracleForegroundEditor : public ForegroundEditor {
  public:
    explicit OracleForegroundEditor(std::shared_ptr<synth::Benchmark> bench)
        : bench_(std::move(bench)) {}
    EditOutcome remove(const LabeledImage& image, const std::string& phrase) override;
    std::string id() const override { return "synthbench-remove"; }

  private:
    std::shared_ptr<synth::Benchmark> bench_;
};

class OracleBackgroundEditor : public BackgroundEditor {
  public:
    explicit OracleBackgroundEditor(std::shared_ptr<synth::Benchmark> bench)
        : bench_(std::move(bench)) {}
    EditOutcome swap(const LabeledImage& image, const std::string& background,
                     const std::string& alt_background) override;
    std::string id() const override { return "synthbench-swap"; }

  private:
    std::shared_ptr<synth::Benchmark> bench_;
};

/// Instruction string for instruction-guided background editors.
std::string editing_instruction(const std::string& background, const std::string& alt_background);

/// Guidance defaults for external instruction-guided editors.
struct ExternalEditorConfig {
    double text_guidance = 7.5;
    double image_guidance = 1.5;
    int steps = 50;
};

EditRecord remove_foreground(const LabeledImage& image, const std::string& phrase,
                             ForegroundEditor& editor, std::uint64_t seed = 0);

/// Requires alt != background (checked before the adapter is invoked).
EditRecord swap_background(const LabeledImage& image, const std::string& background,
                           const std::string& alt_background, BackgroundEditor& editor,
                           std::uint64_t seed = 0);

/// Content-addressed store: PNG + JSON sidecar per record under `dir`.
class EditStore {
  public:
    explicit EditStore(std::filesystem::path dir) : dir_(std::move(dir)) {}
    void save(const EditRecord& record) const;
    std::optional<EditRecord> load(const std::string& record_id) const;
    std::vector<EditRecord> load_all() const;

  private:
    std::filesystem::path dir_;
};

}  // namespace aspire
