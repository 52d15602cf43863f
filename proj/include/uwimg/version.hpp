#pragma once

#define UWIMG_VERSION "0.1.0"
