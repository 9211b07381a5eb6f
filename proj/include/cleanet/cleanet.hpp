#pragma once

#include "cleanet/clustering.hpp"
#include "cleanet/contamination.hpp"
#include "cleanet/contrastive.hpp"
#include "cleanet/detector.hpp"
#include "cleanet/errors.hpp"
#include "cleanet/manifest.hpp"
#include "cleanet/matrix.hpp"
#include "cleanet/model.hpp"
#include "cleanet/nn.hpp"
#include "cleanet/series.hpp"
#include "cleanet/synth.hpp"
#include "cleanet/trainer.hpp"
#include "cleanet/version.hpp"
