#pragma once

#include <string>
#include <string_view>

namespace srn {

/// Snowball English ("Porter2") stemmer.
///
/// Input is expected to be a lowercase word. Characters outside a-z and the
/// apostrophe are treated as consonants, so non-Latin alphabetic tokens pass
/// through the suffix rules without matching anything.
std::string stem_english(std::string_view word);

}  // namespace srn
