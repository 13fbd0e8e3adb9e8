//! Command tables for the math parser.

pub(crate) const FRACTIONS: &[&str] = &["frac", "dfrac", "tfrac", "cfrac"];
pub(crate) const BINOMIALS: &[&str] = &["binom", "dbinom", "tbinom"];
pub(crate) const INFIX_FRACTIONS: &[&str] = &["over", "atop"];
pub(crate) const INFIX_BINOMIALS: &[&str] = &["choose"];

/// Size prefixes of a delimiter.
pub(crate) const DELIMITER_SIZERS: &[&str] = &[
    "left", "right", "middle", "big", "Big", "bigg", "Bigg", "bigl", "bigr", "Bigl", "Bigr", "biggl", "biggr",
    "Biggl", "Biggr", "bigm", "Bigm",
];

/// Commands producing no output.
pub(crate) const IGNORED: &[&str] = &[
    ",", ";", ":", "!", " ", "\\", "quad", "qquad", "displaystyle", "textstyle", "scriptstyle",
    "scriptscriptstyle", "limits", "nolimits", "nonumber", "notag", "bf", "rm", "it", "cal", "sf", "tt",
    "nobreak", "allowbreak", "hfill", "medskip", "smallskip", "bigskip", "relax", "cdotp", "enspace", "thinspace",
    "negthinspace",
];

/// Commands whose single argument is dropped entirely.
pub(crate) const DROP_ARGUMENT: &[&str] = &["phantom", "vphantom", "hphantom", "tag", "hspace", "vspace", "label"];

/// Font and style commands: the argument is kept, the style dropped.
pub(crate) const STYLES: &[&str] = &[
    "mathbf", "mathit", "mathcal", "mathbb", "mathsf", "mathtt", "mathfrak", "mathscr", "boldsymbol", "bm",
    "pmb", "textbf", "textit", "emph", "mathop", "mathnormal", "mathord", "mathbin", "mathrel", "mathopen",
    "mathclose", "displaylimits", "underbrace", "overbrace",
];

/// Commands whose argument is plain text forming one operator name.
pub(crate) const TEXTUAL: &[&str] = &["operatorname", "mathrm", "text", "textrm", "textnormal", "mbox", "hbox", "textsf", "texttt"];

/// Accents: a node whose argument sits in its `within` slot.
pub(crate) const ACCENTS: &[&str] = &[
    "hat", "bar", "tilde", "vec", "dot", "ddot", "dddot", "overline", "underline", "widehat", "widetilde",
    "overrightarrow", "overleftarrow", "check", "breve", "acute", "grave", "mathring", "overleftrightarrow",
];

/// Named functions rendered upright.
pub(crate) const OPERATOR_NAMES: &[&str] = &[
    "sin", "cos", "tan", "cot", "sec", "csc", "arcsin", "arccos", "arctan", "sinh", "cosh", "tanh", "coth", "log",
    "ln", "lg", "exp", "det", "dim", "ker", "deg", "gcd", "hom", "arg", "Pr", "mod", "bmod", "pmod",
];

/// Big operators and limit-like operators carrying scripts.
pub(crate) const BIG_OPERATORS: &[&str] = &[
    "sum", "prod", "coprod", "int", "iint", "iiint", "oint", "bigcup", "bigcap", "bigoplus", "bigotimes",
    "bigodot", "biguplus", "bigsqcup", "bigvee", "bigwedge", "lim", "liminf", "limsup", "max", "min", "sup", "inf",
    "argmax", "argmin",
];

/// Ordinary symbol commands.
pub(crate) const SYMBOLS: &[&str] = &[
    // greek
    "alpha", "beta", "gamma", "delta", "epsilon", "varepsilon", "zeta", "eta", "theta", "vartheta", "iota",
    "kappa", "varkappa", "lambda", "mu", "nu", "xi", "pi", "varpi", "rho", "varrho", "sigma", "varsigma", "tau",
    "upsilon", "phi", "varphi", "chi", "psi", "omega", "Gamma", "Delta", "Theta", "Lambda", "Xi", "Pi", "Sigma",
    "Upsilon", "Phi", "Psi", "Omega", "digamma",
    // relations
    "leq", "le", "geq", "ge", "neq", "ne", "approx", "sim", "simeq", "cong", "equiv", "propto", "ll", "gg", "prec",
    "succ", "preceq", "succeq", "subset", "supset", "subseteq", "supseteq", "in", "notin", "ni", "mid", "nmid",
    "parallel", "perp", "models", "vdash", "dashv", "leqslant", "geqslant", "coloneqq", "triangleq", "doteq",
    // binary operators
    "pm", "mp", "times", "div", "cdot", "ast", "star", "circ", "bullet", "oplus", "ominus", "otimes", "oslash",
    "odot", "cup", "cap", "setminus", "wedge", "vee", "land", "lor", "sqcup", "sqcap", "uplus", "dagger",
    // arrows
    "to", "rightarrow", "leftarrow", "leftrightarrow", "Rightarrow", "Leftarrow", "Leftrightarrow",
    "longrightarrow", "longleftarrow", "Longrightarrow", "mapsto", "longmapsto", "uparrow", "downarrow",
    "implies", "iff", "gets", "hookrightarrow",
    // misc
    "infty", "partial", "nabla", "forall", "exists", "nexists", "neg", "lnot", "emptyset", "varnothing", "ell",
    "hbar", "imath", "jmath", "Re", "Im", "aleph", "prime", "top", "bot", "angle", "cdots", "ldots", "dots",
    "vdots", "ddots", "dotsc", "dotsb", "triangle", "square", "Box", "diamond", "surd", "flat", "sharp",
    // delimiters
    "langle", "rangle", "lfloor", "rfloor", "lceil", "rceil", "lvert", "rvert", "lVert", "rVert", "vert", "Vert",
    "backslash", "{", "}", "|", "#", "%", "_", "$", "&",
];

pub(crate) fn contains(table: &[&str], name: &str) -> bool {
    table.contains(&name)
}
