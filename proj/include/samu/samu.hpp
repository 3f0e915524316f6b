#pragma once

#include "samu/error.hpp"
#include "samu/imaging.hpp"
#include "samu/image_io.hpp"
#include "samu/random.hpp"
#include "samu/filters.hpp"
#include "samu/degradation.hpp"
#include "samu/prompts.hpp"
#include "samu/fusion.hpp"
#include "samu/uncertainty.hpp"
#include "samu/metrics.hpp"
#include "samu/segmenter.hpp"
#include "samu/external_backend.hpp"
#include "samu/colormap.hpp"
#include "samu/synth.hpp"
#include "samu/harness.hpp"
#include "samu/config.hpp"
