// SPDX-License-Identifier: Apache-2.0

#include "care/types.hpp"

namespace care {

std::string_view to_string(ClueKind k) {
  switch (k) {
    case ClueKind::ZoomIn:
      return "zoom";
    case ClueKind::MaskView:
      return "mask";
    case ClueKind::Global:
      return "global";
  }
  throw std::invalid_argument("to_string: bad ClueKind");
}

ClueKind clue_kind_from_string(std::string_view s) {
  if (s == "zoom") return ClueKind::ZoomIn;
  if (s == "mask") return ClueKind::MaskView;
  if (s == "global") return ClueKind::Global;
  throw std::invalid_argument("clue_kind_from_string: " + std::string(s));
}

std::string_view to_string(QType q) {
  return q == QType::Closed ? "closed" : "open";
}

QType qtype_from_string(std::string_view s) {
  if (s == "closed") return QType::Closed;
  if (s == "open") return QType::Open;
  throw std::invalid_argument("qtype_from_string: " + std::string(s));
}

}  // namespace care
