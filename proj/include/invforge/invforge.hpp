#ifndef INVFORGE_INVFORGE_HPP
#define INVFORGE_INVFORGE_HPP

#include "invforge/errors.hpp"
#include "invforge/io.hpp"
#include "invforge/numerics.hpp"
#include "invforge/sdp.hpp"
#include "invforge/sdpa.hpp"
#include "invforge/sos.hpp"
#include "invforge/synthesis.hpp"
#include "invforge/system.hpp"
#include "invforge/verify.hpp"

#endif  // INVFORGE_INVFORGE_HPP
