#pragma once

#include "uwimg/geometry.hpp"
#include "uwimg/image.hpp"
#include "uwimg/image_ops.hpp"
#include "uwimg/pgm_io.hpp"
#include "uwimg/pipeline.hpp"
#include "uwimg/registration_fusion.hpp"
#include "uwimg/renderer.hpp"
#include "uwimg/scene_model.hpp"
#include "uwimg/version.hpp"
#include "uwimg/water_optics.hpp"
