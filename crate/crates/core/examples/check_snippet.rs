//! Runs the embedded rules over a small interrupt-driven program.

use embermine::lexparse::parse_source;
use embermine::rules::{run_embedded_rules, RuleConfig};

const SOURCE: &str = r#"int flag = 0;
int cnt = 0;

void GPIO_Handler(void) {
  flag = 1;
  gpio_put(LED, 1);
  sleep_ms(100);
  printf("button\n");
}

int main(void) {
  cnt = 0;
  volatile int status = 0;
  while (1) {
    if (flag) {
      cnt++;
      flag = 0;
    }
  }
  return status;
}
"#;

fn main() {
    let model = parse_source("main.c", SOURCE);
    println!("functions: {:?}", model.functions.iter().map(|f| &f.name).collect::<Vec<_>>());
    for d in run_embedded_rules(&model, &RuleConfig::default()) {
        println!("{}:{} {:<20} {}", d.path, d.line, d.rule_id, d.message);
    }
}
