/* Minimal timeline runtime for emitted logo pages.
 *
 * Implements the constrained subset this engine generates: chained
 * timeline.add({...}, offset?) entries over translateX/translateY/scale/scaleX/
 * scaleY/rotate/opacity/left/top/width/height with from-to values, named easings,
 * delay or stagger(step), loop, direction alternate, and sequential/absolute/
 * relative offsets. Semantics match the engine's interpreter: sequential entries
 * chain off the previous entry's end, transforms compose translate -> rotate ->
 * scale about the element center, percent translate is relative to the element's
 * own layout box while percent box properties are relative to the canvas.
 */
(function () {
  "use strict";

  var C1 = 1.70158;
  var C3 = C1 + 1;
  var EASINGS = {
    linear: function (t) { return t; },
    easeInQuad: function (t) { return t * t; },
    easeOutQuad: function (t) { return 1 - (1 - t) * (1 - t); },
    easeInOutQuad: function (t) { return t < 0.5 ? 2 * t * t : 1 - Math.pow(-2 * t + 2, 2) / 2; },
    easeInCubic: function (t) { return t * t * t; },
    easeOutCubic: function (t) { return 1 - Math.pow(1 - t, 3); },
    easeInOutCubic: function (t) { return t < 0.5 ? 4 * t * t * t : 1 - Math.pow(-2 * t + 2, 3) / 2; },
    easeInSine: function (t) { return 1 - Math.cos((t * Math.PI) / 2); },
    easeOutSine: function (t) { return Math.sin((t * Math.PI) / 2); },
    easeInOutSine: function (t) { return -(Math.cos(Math.PI * t) - 1) / 2; },
    easeOutBack: function (t) { return 1 + C3 * Math.pow(t - 1, 3) + C1 * Math.pow(t - 1, 2); },
    easeOutElastic: function (t) {
      if (t <= 0) return 0;
      if (t >= 1) return 1;
      return Math.pow(2, -10 * t) * Math.sin((10 * t - 0.75) * ((2 * Math.PI) / 3)) + 1;
    }
  };

  function Stagger(step) { this.step = step; }
  window.stagger = function (step) { return new Stagger(step); };
  window.anime = window.anime || {};
  window.anime.stagger = window.stagger;

  var PROPS = ["translateX", "translateY", "scale", "scaleX", "scaleY", "rotate", "opacity", "left", "top", "width", "height"];
  var entries = [];

  window.timeline = {
    add: function (params, offset) {
      entries.push({ params: params, offset: offset === undefined ? null : offset });
      return window.timeline;
    }
  };

  function resolveTargets(selector) {
    var canvas = document.getElementById("canvas");
    var out = [];
    selector.split(",").forEach(function (part) {
      part = part.trim();
      if (!part) return;
      var found = [];
      try { found = canvas.querySelectorAll(part); } catch (e) { found = []; }
      if (!found.length && !/^[.#]/.test(part)) {
        var byId = document.getElementById(part);
        if (byId) found = [byId];
      }
      Array.prototype.forEach.call(found, function (node) {
        if (node.tagName === "IMG") {
          out.push(node);
        } else {
          Array.prototype.forEach.call(node.querySelectorAll("img"), function (img) { out.push(img); });
        }
      });
    });
    // document order, no duplicates
    var seen = [];
    return out.filter(function (node) {
      if (seen.indexOf(node) >= 0) return false;
      seen.push(node);
      return true;
    });
  }

  function layoutOf(node) {
    var style = node.style;
    return {
      left: parseFloat(style.left) || 0,
      top: parseFloat(style.top) || 0,
      width: parseFloat(style.width) || 0,
      height: parseFloat(style.height) || 0,
      opacity: style.opacity === "" ? 1 : parseFloat(style.opacity),
      translateX: 0, translateY: 0, scale: 1, scaleX: 1, scaleY: 1, rotate: 0
    };
  }

  function parseValue(raw, prop, layout, canvas) {
    if (typeof raw === "number") return raw;
    var m = /^\s*([-+]?[0-9]*\.?[0-9]+)\s*(px|%|deg)?\s*$/.exec(String(raw));
    if (!m) return 0;
    var value = parseFloat(m[1]);
    if (m[2] === "%") {
      if (prop === "translateX") return (value / 100) * layout.width;
      if (prop === "translateY") return (value / 100) * layout.height;
      if (prop === "left" || prop === "width") return (value / 100) * canvas.width;
      return (value / 100) * canvas.height;
    }
    return value;
  }

  function compile() {
    var canvasDiv = document.getElementById("canvas");
    var canvas = { width: parseFloat(canvasDiv.style.width), height: parseFloat(canvasDiv.style.height) };
    var layouts = new Map();
    var tracks = new Map(); // node -> prop -> [segments]
    var cursor = 0;
    var tEnd = 0;

    entries.forEach(function (item) {
      var p = item.params;
      var nodes = resolveTargets(p.targets || "");
      if (!nodes.length) return;
      var duration = p.duration > 0 ? p.duration : 1000;
      var direction = p.direction === "alternate" ? "alternate" : "normal";
      var period = direction === "alternate" ? duration * 2 : duration;
      var infinite = p.loop === true;
      var reps = typeof p.loop === "number" && p.loop >= 1 ? Math.floor(p.loop) : 1;
      var easing = EASINGS[p.easing] ? p.easing : "easeOutQuad";

      var start;
      if (typeof item.offset === "number") start = item.offset;
      else if (typeof item.offset === "string") {
        var rel = /^([-+])=\s*([0-9.]+)$/.exec(item.offset);
        start = rel ? cursor + (rel[1] === "-" ? -1 : 1) * parseFloat(rel[2]) : cursor;
      } else start = cursor;
      start = Math.max(start, 0);

      var maxDelay = 0;
      nodes.forEach(function (node, k) {
        if (!layouts.has(node)) layouts.set(node, layoutOf(node));
        var layout = layouts.get(node);
        var delay = p.delay instanceof Stagger ? p.delay.step * k : (p.delay || 0);
        maxDelay = Math.max(maxDelay, delay);
        if (!tracks.has(node)) tracks.set(node, {});
        var byProp = tracks.get(node);
        PROPS.forEach(function (prop) {
          if (!(prop in p)) return;
          var raw = p[prop];
          var from = null;
          var to;
          if (Array.isArray(raw)) {
            from = parseValue(raw[0], prop, layout, canvas);
            to = parseValue(raw.length > 1 ? raw[1] : raw[0], prop, layout, canvas);
          } else {
            to = parseValue(raw, prop, layout, canvas);
          }
          if (!byProp[prop]) byProp[prop] = [];
          byProp[prop].push({
            begin: start + delay, duration: duration, period: period,
            reps: reps, infinite: infinite, easing: easing, explicitFrom: from, to: to
          });
        });
        if (!infinite) tEnd = Math.max(tEnd, start + delay + period * reps);
      });
      cursor = start + maxDelay + period * reps;
    });

    tracks.forEach(function (byProp, node) {
      var layout = layouts.get(node);
      Object.keys(byProp).forEach(function (prop) {
        var segs = byProp[prop];
        segs.sort(function (a, b) { return a.begin - b.begin; });
        segs.forEach(function (seg, j) {
          seg.from = seg.explicitFrom !== null ? seg.explicitFrom
            : trackValue(segs.slice(0, j), layout[prop], segs[0], seg.begin);
        });
      });
    });

    return { tracks: tracks, layouts: layouts, tEnd: tEnd };
  }

  function segValue(seg, t) {
    var local = t - seg.begin;
    var phase;
    if (seg.infinite) {
      phase = local % seg.period;
    } else {
      var total = seg.period * seg.reps;
      phase = local >= total ? seg.period : local % seg.period;
    }
    var progress = phase <= seg.duration ? phase / seg.duration : (seg.period - phase) / seg.duration;
    progress = Math.min(Math.max(progress, 0), 1);
    return seg.from + (seg.to - seg.from) * EASINGS[seg.easing](progress);
  }

  function trackValue(segs, layoutValue, firstSeg, t) {
    var active = null;
    for (var i = 0; i < segs.length; i++) {
      if (segs[i].begin <= t) active = segs[i];
      else break;
    }
    if (!active) {
      if (firstSeg && firstSeg.explicitFrom !== null) return firstSeg.explicitFrom;
      return layoutValue;
    }
    return segValue(active, t);
  }

  function apply(compiled, t) {
    compiled.tracks.forEach(function (byProp, node) {
      var layout = compiled.layouts.get(node);
      var value = {};
      PROPS.forEach(function (prop) {
        var segs = byProp[prop];
        value[prop] = segs ? trackValue(segs, layout[prop], segs[0], t) : layout[prop];
      });
      node.style.left = value.left + "px";
      node.style.top = value.top + "px";
      node.style.width = Math.max(value.width, 0) + "px";
      node.style.height = Math.max(value.height, 0) + "px";
      node.style.opacity = String(Math.min(Math.max(value.opacity, 0), 1));
      var sx = value.scale * value.scaleX;
      var sy = value.scale * value.scaleY;
      node.style.transformOrigin = "50% 50%";
      node.style.transform =
        "translate(" + value.translateX + "px," + value.translateY + "px) " +
        "rotate(" + value.rotate + "deg) " +
        "scale(" + sx + "," + sy + ")";
    });
  }

  function start() {
    var compiled = compile();
    var began = null;
    var horizon = compiled.tEnd;
    var anyInfinite = false;
    compiled.tracks.forEach(function (byProp) {
      Object.keys(byProp).forEach(function (prop) {
        byProp[prop].forEach(function (seg) { if (seg.infinite) anyInfinite = true; });
      });
    });
    apply(compiled, 0);
    var raf = typeof window.requestAnimationFrame === "function"
      ? window.requestAnimationFrame.bind(window)
      : null;
    if (!raf) {
      apply(compiled, horizon); // no frame clock: settle exactly on the final frame
      return;
    }
    function frame(now) {
      if (began === null) began = now;
      var t = now - began;
      apply(compiled, anyInfinite ? t : Math.min(t, horizon));
      if (anyInfinite || t < horizon) {
        raf(frame);
      } else {
        apply(compiled, horizon); // settle exactly on the final frame
      }
    }
    raf(frame);
  }

  // instrumentation seam for headless tests: evaluate the timeline at any t
  window.__timelineRuntime = {
    start: start,
    compile: compile,
    apply: apply,
    easings: EASINGS
  };

  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", start);
  } else {
    window.addEventListener("load", start);
  }
})();
