#pragma once

#include "sprify/types.hpp"
#include "sprify/linalg.hpp"
#include "sprify/descriptor_system.hpp"
#include "sprify/spectral_check.hpp"
#include "sprify/frequency_check.hpp"
#include "sprify/synthesis.hpp"
#include "sprify/spr_verify.hpp"
#include "sprify/system_io.hpp"
