#include "lrhmm/dataio.hpp"
#include "lrhmm/forecast.hpp"

#include <ostream>

namespace lrhmm {

void write_forecast_csv(std::ostream& out, const std::vector<ForecastRow>& rows) {
  out << "time_s,channel,mean,lower,upper,class\n";
  for (const auto& r : rows) {
    out << format_double(r.time_s) << ',' << r.channel << ',' << format_double(r.mean) << ','
        << format_double(r.lower) << ',' << format_double(r.upper) << ',' << r.class_label << '\n';
  }
}

}  // namespace lrhmm
