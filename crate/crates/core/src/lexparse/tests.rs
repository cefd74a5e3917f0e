use super::*;

const SNIPPET1: &str = include_str!("../../tests/fixtures/snippet1.c");
const TONE: &str = include_str!("../../tests/fixtures/tone.c");

fn names(vars: &[VarModel]) -> Vec<(&str, u32)> {
    vars.iter().map(|v| (v.name.as_str(), v.line)).collect()
}

#[test]
fn snippet_round_trips() {
    for src in [SNIPPET1, TONE] {
        assert_eq!(tokenize(src).reconstruct(), src);
    }
}

#[test]
fn snippet_structure() {
    let m = parse_source("main.c", SNIPPET1);
    assert!(m.parse_errors.is_empty(), "{:?}", m.parse_errors);

    let globals: Vec<_> = m.global_vars.iter().map(|v| (v.name.as_str(), v.line, v.is_volatile)).collect();
    assert_eq!(globals, [("flag", 1, false), ("cnt", 2, true)]);

    let isr = m.function("GPIO_Handler").unwrap();
    let calls: Vec<_> = isr.calls.iter().map(|c| (c.callee.as_str(), c.line)).collect();
    assert_eq!(calls, [("gpio_put", 6), ("sleep_ms", 7), ("printf", 8)]);
    assert!(isr.loops.is_empty());
    assert_eq!(isr.writes.iter().map(|w| (w.name.as_str(), w.line)).collect::<Vec<_>>(), [("flag", 5)]);

    let main = m.function("main").unwrap();
    assert_eq!(main.loops, [LoopSite { kind: LoopKind::While, line: 14 }]);
    assert_eq!(main.calls.iter().map(|c| (c.callee.as_str(), c.line)).collect::<Vec<_>>(), [("sprintf", 16)]);
    assert_eq!(names(&main.locals), [("status", 13)]);
    assert!(main.locals[0].is_volatile);
    assert!(main.touches_nonlocal("flag"));
    assert!(main.touches_nonlocal("cnt"));
    assert!(main.params.is_empty());
}

#[test]
fn tone_loop_variable_uninitialized() {
    let m = parse_source("tone.c", TONE);
    let f = m.function("tone").unwrap();
    assert_eq!(f.loops, [LoopSite { kind: LoopKind::For, line: 4 }]);
    let i = f.locals.iter().find(|v| v.name == "i").unwrap();
    assert_eq!(i.line, 4);
    assert!(!i.initialized_at_decl);
    assert!(f.locals.iter().find(|v| v.name == "periodo").unwrap().initialized_at_decl);
    assert_eq!(names(&f.params), [("freq", 1), ("time", 1)]);
    assert!(m.global_vars.is_empty());
}

#[test]
fn include_guard_facts() {
    let m = parse_source("a.h", "/* hdr */\n#ifndef A_H\n#define A_H\nint f(void);\n#endif /* A_H */\n");
    assert!(m.guard.has_ifndef_define_pair);
    assert_eq!(m.guard.macro_name.as_deref(), Some("A_H"));

    let m = parse_source("a.h", "#if !defined(A_H)\n#define A_H\n#endif\n");
    assert!(m.guard.has_ifndef_define_pair);

    // Code after the closing #endif is outside the guard.
    let m = parse_source("a.h", "#ifndef A_H\n#define A_H\n#endif\nint x;\n");
    assert!(!m.guard.has_ifndef_define_pair);

    // Mismatched macro names.
    let m = parse_source("a.h", "#ifndef A_H\n#define B_H\nint f(void);\n#endif\n");
    assert!(!m.guard.has_ifndef_define_pair);

    let m = parse_source("a.h", "#pragma once\nint f(void);\n");
    assert!(m.guard.has_pragma_once);
    assert!(!m.guard.has_ifndef_define_pair);
}

#[test]
fn nested_conditionals_inside_guard() {
    let src = "#ifndef A_H\n#define A_H\n#ifdef X\nint f(void);\n#else\nint g(void);\n#endif\n#endif\n";
    let m = parse_source("a.h", src);
    assert!(m.guard.has_ifndef_define_pair);
    assert_eq!(m.functions.len(), 2);
}

#[test]
fn includes_recorded() {
    let m = parse_source("m.c", "#include <stdio.h>\n#include \"board.h\"\n");
    let inc: Vec<_> = m.includes.iter().map(|i| (i.name.as_str(), i.system)).collect();
    assert_eq!(inc, [("stdio.h", true), ("board.h", false)]);
}

#[test]
fn declarations_and_flags() {
    let src = "\
static const uint8_t table[4] = {1, 2, 3, 4};
extern int shared;
int a, *b, c[3];
struct point { int x; int y; } origin;
struct tag;
typedef struct { int v; } wrap_t;
void (*handler)(int);
int proto(int, char *name);
static inline int twice(int v) { return 2 * v; }
";
    let m = parse_source("d.h", src);
    let g: Vec<_> = m.global_vars.iter().map(|v| v.name.as_str()).collect();
    assert_eq!(g, ["table", "shared", "a", "b", "c", "origin", "handler"]);
    let table = m.global("table").unwrap();
    assert!(table.is_static && table.is_const && table.initialized_at_decl);
    assert!(m.global("shared").unwrap().is_extern);
    let proto = m.functions.iter().find(|f| f.name == "proto").unwrap();
    assert!(!proto.is_definition);
    assert_eq!(names(&proto.params), [("name", 8)]);
    let twice = m.function("twice").unwrap();
    assert!(twice.is_static && twice.is_inline);
}

#[test]
fn locals_shadow_globals() {
    let src = "int g;\nvoid f(int g2) {\n  int g = 1;\n  g = 2;\n  g2 = 3;\n}\nvoid h(void) { g++; }\n";
    let m = parse_source("s.c", src);
    let f = m.function("f").unwrap();
    assert!(f.writes.iter().all(|w| w.local));
    assert!(!f.touches_nonlocal("g"));
    let h = m.function("h").unwrap();
    assert!(h.touches_nonlocal("g"));
    assert_eq!(h.writes[0].name, "g");
}

#[test]
fn loops_and_do_while() {
    let src = "void f(void) {\n  do {\n    x++;\n  } while (x < 3);\n  while (!ready);\n  for (;;) {}\n}\n";
    let m = parse_source("l.c", src);
    let f = m.function("f").unwrap();
    let loops: Vec<_> = f.loops.iter().map(|l| (l.kind, l.line)).collect();
    assert_eq!(loops, [(LoopKind::Do, 2), (LoopKind::While, 5), (LoopKind::For, 6)]);
}

#[test]
fn writes_through_members_and_indices() {
    let src = "void f(void) {\n  buf[i] = 1;\n  s.x += 2;\n  p->y = 3;\n  --n;\n  if (a == b) {}\n}\n";
    let m = parse_source("w.c", src);
    let f = m.function("f").unwrap();
    let w: Vec<_> = f.writes.iter().map(|a| a.name.as_str()).collect();
    assert_eq!(w, ["buf", "s", "p", "n"]);
    let r: Vec<_> = f.reads.iter().map(|a| a.name.as_str()).collect();
    assert_eq!(r, ["i", "a", "b"]);
}

#[test]
fn strings_and_comments_not_scanned() {
    let src = "void f(void) {\n  puts(\"printf(x)\"); // sleep_ms(1)\n  /* delay_ms(2); */\n}\n";
    let m = parse_source("c.c", src);
    let calls: Vec<_> = m.function("f").unwrap().calls.iter().map(|c| c.callee.as_str()).collect();
    assert_eq!(calls, ["puts"]);
}

#[test]
fn unbalanced_braces_give_partial_model() {
    let m = parse_source("u.c", "int g;\nvoid f(void) {\n  if (x) {\n    g = 1;\n}\n");
    assert!(m.parse_errors.iter().any(|e| e.message.contains("unbalanced")));
    assert!(m.global("g").is_some());
    assert!(m.function("f").is_some());

    let m = parse_source("u.c", "}\nint g;\n");
    assert_eq!(m.parse_errors.len(), 1);
    assert!(m.global("g").is_some());
}

#[test]
fn extern_c_block_is_transparent() {
    let src = "#ifndef A_H\n#define A_H\n#ifdef __cplusplus\nextern \"C\" {\n#endif\nvoid f(void);\n#ifdef __cplusplus\n}\n#endif\n#endif\n";
    let m = parse_source("a.h", src);
    assert!(m.parse_errors.is_empty());
    assert_eq!(m.functions.len(), 1);
}

#[test]
fn body_spans_inside_file() {
    let m = parse_source("main.c", SNIPPET1);
    for f in &m.functions {
        let b = f.body.unwrap();
        assert!(b.start >= 1 && b.end <= m.line_count);
        for line in f.calls.iter().map(|c| c.line).chain(f.loops.iter().map(|l| l.line)) {
            assert!(b.contains(line));
        }
    }
}

#[test]
fn isr_by_pattern() {
    let m = parse_source("main.c", SNIPPET1);
    let isrs = classify_isr(&m, &IsrConfig::default());
    assert_eq!(isrs.into_iter().collect::<Vec<_>>(), ["GPIO_Handler"]);
}

#[test]
fn isr_by_registration() {
    let src = "void but_cb(uint32_t id, uint32_t mask) { flag = 1; }\n\
               int main(void) {\n  pio_handler_set(PIOA, ID_PIOA, MASK, PIO_IT_EDGE, but_cb);\n}\n";
    let m = parse_source("main.c", src);
    let none = classify_isr(&m, &IsrConfig::default());
    assert!(none.is_empty());
    let cfg = IsrConfig { isr_registration_calls: vec!["pio_handler_set".into()], ..IsrConfig::default() };
    let isrs = classify_isr(&m, &cfg);
    assert!(isrs.contains("but_cb"));
    assert!(!isrs.contains("main"));
}

#[test]
fn invalid_pattern_rejected() {
    let cfg = IsrConfig { isr_patterns: vec!["[".into()], ..IsrConfig::default() };
    assert!(cfg.validate().is_err());
}

mod props {
    use super::*;
    use proptest::prelude::*;

    fn c_like() -> impl Strategy<Value = String> {
        let atoms = prop::sample::select(vec![
            "int", "x", "volatile", "=", ";", "{", "}", "(", ")", "\"s\\\"q\"", "'c'", "/* c */",
            "// l\n", "#define A 1\n", "\n", " ", "\t", "\\\n", "0x1F", "while", "for", "*", ",",
            "\"open", "/* open", "é", "...", "->", "++",
        ]);
        prop::collection::vec(atoms, 0..60).prop_map(|v| v.concat())
    }

    proptest! {
        #[test]
        fn lexing_is_lossless(src in c_like()) {
            prop_assert_eq!(tokenize(&src).reconstruct(), src);
        }

        #[test]
        fn positions_monotone(src in c_like()) {
            let ts = tokenize(&src);
            for w in ts.tokens.windows(2) {
                prop_assert!((w[0].line, w[0].column) < (w[1].line, w[1].column));
            }
        }

        #[test]
        fn parser_is_total(src in c_like()) {
            let m = parse_source("p.c", &src);
            for f in &m.functions {
                if let Some(b) = f.body {
                    prop_assert!(b.start <= b.end);
                } else {
                    prop_assert!(f.locals.is_empty() && f.calls.is_empty() && f.loops.is_empty());
                }
            }
            prop_assert!(m.global_vars.iter().all(|v| v.scope == VarScope::File));
        }

        #[test]
        fn adding_pattern_never_shrinks_isr_set(extra in "[A-Za-z_*]{1,8}") {
            let m = parse_source("main.c", SNIPPET1);
            let base = IsrConfig::default();
            let mut more = base.clone();
            more.isr_patterns.push(extra);
            prop_assert!(classify_isr(&m, &base).is_subset(&classify_isr(&m, &more)));
        }
    }
}
