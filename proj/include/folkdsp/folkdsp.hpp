#pragma once

#include "folkdsp/audio_io.hpp"
#include "folkdsp/config.hpp"
#include "folkdsp/error.hpp"
#include "folkdsp/eval.hpp"
#include "folkdsp/features.hpp"
#include "folkdsp/forest.hpp"
#include "folkdsp/genre.hpp"
#include "folkdsp/mlp.hpp"
#include "folkdsp/model_file.hpp"
#include "folkdsp/spectral.hpp"
#include "folkdsp/svg.hpp"
#include "folkdsp/synth.hpp"
#include "folkdsp/unsup.hpp"
