#pragma once

#include <string_view>

namespace retrovec::detail {

// Irregular English forms, "form<TAB>lemma" per line. Drawn from the usual
// irregular verb, noun-plural and comparative tables; consonant-doubling
// forms are listed explicitly since the suffix rules cannot undo them.
inline constexpr std::string_view kDefaultExceptions =
    // verbs: be, have, do, go
    "am\tbe\nis\tbe\nare\tbe\nwas\tbe\nwere\tbe\nbeen\tbe\nbeing\tbe\n"
    "has\thave\nhad\thave\nhaving\thave\n"
    "does\tdo\ndid\tdo\ndone\tdo\n"
    "goes\tgo\nwent\tgo\ngone\tgo\n"
    // strong and irregular verbs
    "arose\tarise\narisen\tarise\nawoke\tawake\nborne\tbear\n"
    "became\tbecome\nbegan\tbegin\nbegun\tbegin\nbent\tbend\n"
    "bitten\tbite\nbled\tbleed\nblew\tblow\nblown\tblow\n"
    "broke\tbreak\nbroken\tbreak\nbred\tbreed\nbrought\tbring\nbuilt\tbuild\n"
    "burnt\tburn\nbought\tbuy\ncaught\tcatch\nchose\tchoose\nchosen\tchoose\n"
    "clung\tcling\ncame\tcome\ncrept\tcreep\ndealt\tdeal\ndug\tdig\n"
    "drew\tdraw\ndrawn\tdraw\ndreamt\tdream\ndrank\tdrink\ndrunk\tdrink\n"
    "drove\tdrive\ndriven\tdrive\nate\teat\neaten\teat\n"
    "fallen\tfall\nfed\tfeed\nfought\tfight\nfound\tfind\n"
    "fled\tflee\nflew\tfly\nflown\tfly\nforbade\tforbid\nforgot\tforget\n"
    "forgotten\tforget\nforgave\tforgive\nforgiven\tforgive\nfroze\tfreeze\n"
    "frozen\tfreeze\ngot\tget\ngotten\tget\ngave\tgive\ngiven\tgive\n"
    "grew\tgrow\ngrown\tgrow\nhung\thang\nheard\thear\nhid\thide\n"
    "hidden\thide\nheld\thold\nkept\tkeep\nknelt\tkneel\nknew\tknow\n"
    "known\tknow\nlaid\tlay\nled\tlead\nleapt\tleap\n"
    "lent\tlend\nlost\tlose\nmade\tmake\n"
    "meant\tmean\nmet\tmeet\npaid\tpay\nrode\tride\nridden\tride\nrang\tring\n"
    "risen\trise\nran\trun\nsaid\tsay\n"
    "seen\tsee\nsought\tseek\nsold\tsell\nsent\tsend\nshook\tshake\n"
    "shaken\tshake\nshone\tshine\nshown\tshow\nshrank\tshrink\n"
    "sang\tsing\nsung\tsing\nsank\tsink\nsunk\tsink\nsat\tsit\nslept\tsleep\n"
    "slid\tslide\nspoke\tspeak\nspoken\tspeak\nsped\tspeed\nspent\tspend\n"
    "spun\tspin\nsprang\tspring\nsprung\tspring\nstood\tstand\nstole\tsteal\n"
    "stolen\tsteal\nstuck\tstick\nstung\tsting\nstank\tstink\nstrode\tstride\n"
    "struck\tstrike\nstrove\tstrive\nswore\tswear\nsworn\tswear\nswept\tsweep\n"
    "swam\tswim\nswum\tswim\nswung\tswing\ntook\ttake\ntaken\ttake\n"
    "taught\tteach\ntore\ttear\ntorn\ttear\ntold\ttell\nthought\tthink\n"
    "threw\tthrow\nthrown\tthrow\nunderstood\tunderstand\nwoke\twake\n"
    "woken\twake\nwore\twear\nworn\twear\nwove\tweave\nwoven\tweave\n"
    "wept\tweep\nwon\twin\nwrote\twrite\nwritten\twrite\n"
    // consonant doubling and y-to-i past tenses
    "running\trun\nstopped\tstop\nstopping\tstop\nplanned\tplan\n"
    "planning\tplan\nsitting\tsit\ngetting\tget\nswimming\tswim\n"
    "beginning\tbegin\nhitting\thit\ncutting\tcut\nputting\tput\n"
    "setting\tset\nwinning\twin\nshopping\tshop\ndropped\tdrop\n"
    "dropping\tdrop\nrobbed\trob\nrobbing\trob\nbegged\tbeg\nhugged\thug\n"
    "dried\tdry\ndries\tdry\ncried\tcry\ntried\ttry\napplied\tapply\n"
    "carried\tcarry\nstudied\tstudy\nworried\tworry\nhurried\thurry\n"
    "married\tmarry\nreplied\treply\ndenied\tdeny\nlying\tlie\ndying\tdie\n"
    "tying\ttie\n"
    // irregular plurals
    "children\tchild\nfeet\tfoot\ngeese\tgoose\nteeth\ttooth\nmice\tmouse\n"
    "lice\tlouse\noxen\tox\npeople\tperson\nwives\twife\nknives\tknife\n"
    "lives\tlife\nleaves\tleaf\nwolves\twolf\nhalves\thalf\nshelves\tshelf\n"
    "loaves\tloaf\nthieves\tthief\ncalves\tcalf\ncacti\tcactus\nfungi\tfungus\n"
    "nuclei\tnucleus\nstimuli\tstimulus\nalumni\talumnus\ncriteria\tcriterion\n"
    "phenomena\tphenomenon\nanalyses\tanalysis\ncrises\tcrisis\ntheses\tthesis\n"
    "axes\taxis\nindices\tindex\nmatrices\tmatrix\nvertices\tvertex\n"
    "appendices\tappendix\nbacteria\tbacterium\nmedia\tmedium\n"
    "potatoes\tpotato\ntomatoes\ttomato\nheroes\thero\nechoes\techo\n"
    // adjectives
    "better\tgood\nbest\tgood\nworse\tbad\nworst\tbad\nfurther\tfar\n"
    "farther\tfar\nfurthest\tfar\nfarthest\tfar\nhappier\thappy\n"
    "happiest\thappy\neasier\teasy\neasiest\teasy\nbigger\tbig\nbiggest\tbig\n"
    "hotter\thot\nhottest\thot\nthinner\tthin\nthinnest\tthin\n"
    "fatter\tfat\nfattest\tfat\nsadder\tsad\nsaddest\tsad\n";

inline constexpr std::string_view kDefaultStopwords =
    "a\nan\nthe\nof\nto\nfor\nin\non\nat\nby\nwith\nand\nor\n";

}  // namespace retrovec::detail
