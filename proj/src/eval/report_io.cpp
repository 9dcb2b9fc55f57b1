#include "hac/eval/report_io.hpp"

#include <fstream>
#include <sstream>

#include "hac/errors.hpp"

namespace hac::eval {

namespace {

nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

nlohmann::ordered_json audit_json(const objectives::AuditReport& audit) {
  nlohmann::ordered_json j;
  j["image_side_fraction"] = audit.image_side_fraction;
  j["text_side_fraction"] = audit.text_side_fraction;
  j["retain_drift"] = audit.retain_drift;
  j["forget_drift"] = audit.forget_drift;
  j["retain_pairs"] = audit.retain_pairs;
  j["forget_pairs"] = audit.forget_pairs;
  return j;
}

nlohmann::ordered_json report_json(const EvalReport& report, bool include_probe) {
  nlohmann::ordered_json j;
  j["r_acc"] = optional_number(report.r_acc);
  j["f_acc"] = optional_number(report.f_acc);
  auto per_class = nlohmann::ordered_json::array();
  for (const auto& a : report.per_class_accuracy) per_class.push_back(optional_number(a));
  j["per_class_accuracy"] = per_class;
  j["confusion"] = report.confusion;
  if (include_probe) {
    j["probe_r_acc"] = optional_number(report.probe_r_acc);
    j["probe_f_acc"] = optional_number(report.probe_f_acc);
  }
  if (report.audit) j["audit"] = audit_json(*report.audit);
  return j;
}

std::string confusion_csv(const ConfusionMatrix& confusion) {
  std::ostringstream os;
  os << "true\\pred";
  for (std::size_t j = 0; j < confusion.size(); ++j) os << ',' << j;
  os << '\n';
  for (std::size_t i = 0; i < confusion.size(); ++i) {
    os << i;
    for (std::size_t v : confusion[i]) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace hac::eval
