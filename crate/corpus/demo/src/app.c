/* Application entry: one init phase, then the cyclic schedule. */

void initialization(void);
void run(void);
void sensor_sample(float v);
void control_step(float x, int channel);
float speed_scale(float x);
void speed_update(float x);
void filter_update(float energy);
int lookup(int i);

float app_speed;
int app_cal;

void app_main(float v, int k) {
  initialization();
  sensor_sample(v);
  control_step(v, k);
  speed_update(v);
  if (v >= 0.0 && v <= 32000.0) {
    app_speed = speed_scale(v);
  }
  filter_update(v);
  if (k >= 0 && k <= 7) {
    app_cal = lookup(k);
  }
  run();
}
