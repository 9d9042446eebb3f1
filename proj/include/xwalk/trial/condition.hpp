#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace xwalk
{

enum class Condition : std::uint8_t {
  Control,        // not distracted
  Distracted,     // smartphone maze task
  DistractedLed,  // smartphone maze task + smart-LED crosswalk
};

inline constexpr std::array<Condition, 3> kAllConditions{
  Condition::Control, Condition::Distracted, Condition::DistractedLed};

std::string_view to_string(Condition c) noexcept;
/// Accepts the enum spelling ("DistractedLed") and a few aliases
/// ("control", "distracted", "distracted_led", "led"). Throws InvalidArgument.
Condition condition_from_string(std::string_view s);
/// Row label used in the text reports.
std::string_view display_name(Condition c) noexcept;

constexpr bool has_phone(Condition c) noexcept { return c != Condition::Control; }
constexpr std::size_t index_of(Condition c) noexcept { return static_cast<std::size_t>(c); }

enum class AgeBand : std::uint8_t { Age18To30, Age30Plus };

std::string_view to_string(AgeBand a) noexcept;
AgeBand age_band_from_string(std::string_view s);

struct ParticipantTags
{
  bool female = false;
  AgeBand age_band = AgeBand::Age18To30;

  bool operator==(const ParticipantTags &) const = default;
};

}  // namespace xwalk
