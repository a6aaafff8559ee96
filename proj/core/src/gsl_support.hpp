#pragma once

namespace supou::detail {

// Turns off GSL's abort-on-error handler once per process.
void silence_gsl();

}  // namespace supou::detail
