const search = function (req, res) {
  var q = req.q;
  log("search");
  res.send(encodeURIComponent(q));
};
