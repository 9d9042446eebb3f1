#include "xwalk/trial/condition.hpp"

#include "xwalk/core/errors.hpp"

#include <string>

namespace xwalk
{

std::string_view to_string(Condition c) noexcept
{
  switch (c) {
    case Condition::Control:
      return "Control";
    case Condition::Distracted:
      return "Distracted";
    case Condition::DistractedLed:
      return "DistractedLed";
  }
  return "Control";
}

Condition condition_from_string(std::string_view s)
{
  if (s == "Control" || s == "control" || s == "not_distracted") {
    return Condition::Control;
  }
  if (s == "Distracted" || s == "distracted" || s == "smartphone") {
    return Condition::Distracted;
  }
  if (s == "DistractedLed" || s == "distracted_led" || s == "led") {
    return Condition::DistractedLed;
  }
  throw InvalidArgument("unknown condition '" + std::string(s) + "'");
}

std::string_view display_name(Condition c) noexcept
{
  switch (c) {
    case Condition::Control:
      return "Not distracted";
    case Condition::Distracted:
      return "Smartphone";
    case Condition::DistractedLed:
      return "Distracted & safety measure";
  }
  return "";
}

std::string_view to_string(AgeBand a) noexcept
{
  return a == AgeBand::Age30Plus ? "30+" : "18-30";
}

AgeBand age_band_from_string(std::string_view s)
{
  if (s == "18-30" || s == "18_30") {
    return AgeBand::Age18To30;
  }
  if (s == "30+" || s == "30_plus") {
    return AgeBand::Age30Plus;
  }
  throw InvalidArgument("unknown age band '" + std::string(s) + "'");
}

}  // namespace xwalk
