// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace care {

// The three clue types a grounded answer can be conditioned on.
enum class ClueKind { ZoomIn, MaskView, Global };

// Question style; decides which accuracy rule applies.
enum class QType { Closed, Open };

std::string_view to_string(ClueKind k);
ClueKind clue_kind_from_string(std::string_view s);

std::string_view to_string(QType q);
QType qtype_from_string(std::string_view s);

}  // namespace care
