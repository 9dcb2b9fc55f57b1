#include "hac/objectives/audit.hpp"

#include <cmath>

#include "hac/errors.hpp"

namespace hac::objectives {

namespace {

double mean_drift(const PairEmbeddings& before, const PairEmbeddings& after, SimilarityKind kind, double c) {
  if (before.size() != after.size()) throw ShapeError("audit: original and unlearned sample counts differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    acc += std::fabs(row_similarity(after.image, i, after.text, i, kind, c) -
                     row_similarity(before.image, i, before.text, i, kind, c));
  }
  return acc / static_cast<double>(before.size());
}

}  // namespace

AuditReport unlearning_definition_audit(const AuditInputs& in) {
  const std::size_t nr = in.retain_unlearned.size();
  const std::size_t nf = in.forget_unlearned.size();
  if (nr == 0 || nf == 0) throw ValidationError("audit needs non-empty retain and forget samples");

  const PairEmbeddings& r = in.retain_unlearned;
  const PairEmbeddings& f = in.forget_unlearned;
  std::size_t image_side = 0, text_side = 0;
  for (std::size_t i = 0; i < nf; ++i) {
    const double own = row_similarity(f.image, i, f.text, i, in.kind, in.curvature);
    bool image_hit = false, text_hit = false;
    for (std::size_t j = 0; j < nr && !(image_hit && text_hit); ++j) {
      if (!image_hit && own < row_similarity(f.image, i, r.text, j, in.kind, in.curvature)) image_hit = true;
      if (!text_hit && own < row_similarity(r.image, j, f.text, i, in.kind, in.curvature)) text_hit = true;
    }
    image_side += image_hit;
    text_side += text_hit;
  }

  AuditReport report;
  report.retain_pairs = nr;
  report.forget_pairs = nf;
  report.image_side_fraction = static_cast<double>(image_side) / static_cast<double>(nf);
  report.text_side_fraction = static_cast<double>(text_side) / static_cast<double>(nf);
  report.retain_drift = mean_drift(in.retain_original, in.retain_unlearned, in.kind, in.curvature);
  report.forget_drift = mean_drift(in.forget_original, in.forget_unlearned, in.kind, in.curvature);
  return report;
}

}  // namespace hac::objectives
